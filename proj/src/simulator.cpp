#include "pdlp/simulator.hpp"

#include "pdlp/arbitrage.hpp"
#include "pdlp/errors.hpp"
#include "pdlp/hedging.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace pdlp::sim {

std::vector<PriceVector> gbm_paths(const GbmSpec& spec, int T, std::uint64_t seed)
{
    const auto n = spec.initial_prices.size();
    if (spec.drift.size() != n || spec.volatility.size() != n || spec.correlation.rows() != n ||
        spec.correlation.cols() != n) {
        throw ConfigError("GBM specification dimensions disagree");
    }
    if (T < 0) {
        throw ConfigError("horizon must be nonnegative");
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(spec.correlation);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() < -1e-10) {
        throw ConfigError("GBM correlation matrix is not positive semidefinite");
    }
    const Mat factor = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Vec log_drift = spec.drift - 0.5 * spec.volatility.cwiseProduct(spec.volatility);
    Vec log_p = spec.initial_prices.array().log();

    std::vector<PriceVector> path;
    path.reserve(static_cast<std::size_t>(T) + 1);
    path.emplace_back(spec.initial_prices);
    Vec eps(n);
    for (int t = 1; t <= T; ++t) {
        for (Eigen::Index i = 0; i < n; ++i) {
            eps[i] = normal(rng);
        }
        const Vec z = factor * eps;
        log_p += log_drift + spec.volatility.cwiseProduct(z);
        path.emplace_back(Vec(log_p.array().exp()));
    }
    return path;
}

namespace {

double value_at(const PriceVector& p, const Vec& x)
{
    return p.values().dot(x);
}

} // namespace

Simulator::Simulator(ScenarioConfig config) : config_(std::move(config))
{
    config_.validate();
    for (std::size_t a = 0; a < config_.markets.size(); ++a) {
        for (std::size_t b = a + 1; b < config_.markets.size(); ++b) {
            if (config_.markets[a].asset == config_.markets[b].asset) {
                throw ConfigError("at most one market per asset");
            }
        }
    }
    const PriceVector p0(config_.initial_prices());
    state_.history.push_back(p0);
    state_.pool.reserves = config_.pool.reserves;
    state_.pool.target_weights = config_.pool.target_weights;
    state_.pool.fee = config_.pool.fee;
    state_.pool.shares = config_.pool.shares;
    try {
        state_.pool.validate();
    } catch (const InvalidArgumentError& e) {
        throw ConfigError(std::string("pool: ") + e.what());
    }
    discount_ = twm::discount_from_config(config_.pool.discount, p0, state_.pool.reserves);
    state_.rng.seed(config_.seed ^ 0x9e3779b97f4a7c15ULL);

    for (const auto& spec : config_.markets) {
        perp::PerpMarket m;
        m.mark_price = p0[spec.asset];
        m.kappa = spec.kappa;
        m.validate();
        state_.markets.push_back(m);
    }
    for (std::size_t k = 0; k < config_.markets.size(); ++k) {
        const auto& spec = config_.markets[k];
        if (spec.long_oi > 0.0 && !open_position(p0, static_cast<int>(k), spec.long_oi, spec.leverage, Owner::Background)) {
            throw ConfigError("pool cannot fund the initial long open interest of asset " + std::to_string(spec.asset));
        }
        if (spec.short_oi > 0.0 &&
            !open_position(p0, static_cast<int>(k), spec.short_oi, -spec.leverage, Owner::Background)) {
            throw ConfigError("pool cannot fund the initial short open interest of asset " + std::to_string(spec.asset));
        }
    }
    state_.lp_shares = config_.lp_share_fraction * state_.pool.shares;
    state_.hedge = Vec::Zero(config_.n_assets());
    state_.initial_lp_value =
        state_.lp_shares * value_at(p0, state_.pool.reserves) / state_.pool.shares;
}

Vec Simulator::loan_for(const perp::TraderPosition& pos) const
{
    const PriceVector& p = state_.history.back();
    Vec loan = Vec::Zero(config_.n_assets());
    if (pos.side() == perp::Side::Long || pos.asset == config_.numeraire) {
        loan[pos.asset] = pos.collateral / p[pos.asset];
    } else {
        loan[config_.numeraire] = pos.collateral / p[config_.numeraire];
    }
    return loan;
}

bool Simulator::open_position(const PriceVector& p, int market, double size, double leverage, Owner owner)
{
    if (!(size > 0.0)) {
        return false;
    }
    const int asset = config_.markets[static_cast<std::size_t>(market)].asset;
    perp::TraderPosition pos;
    pos.size = size;
    pos.leverage = leverage;
    pos.entry_price = p[asset];
    pos.asset = asset;
    pos.collateral = perp::minimum_collateral(size, leverage, p[asset]);
    while (!perp::check_collateral(pos)) {
        pos.collateral = std::nextafter(pos.collateral, std::numeric_limits<double>::infinity());
    }
    pos.id = state_.next_id;
    pos.opened_at = static_cast<std::int64_t>(state_.history.size()) - 1;
    const Vec loan = loan_for(pos);
    const Vec after = state_.pool.total_loans() + loan;
    if ((after.array() > state_.pool.reserves.array()).any()) {
        return false;
    }
    ++state_.next_id;
    state_.positions.push_back(pos);
    state_.pool.loans.push_back({pos.id, loan});
    state_.owners[pos.id] = owner;
    refresh_open_interest();
    return true;
}

void Simulator::close_position(std::uint64_t id)
{
    auto& ps = state_.positions;
    ps.erase(std::remove_if(ps.begin(), ps.end(), [id](const auto& p) { return p.id == id; }), ps.end());
    auto& loans = state_.pool.loans;
    loans.erase(std::remove_if(loans.begin(), loans.end(), [id](const auto& l) { return l.position_id == id; }),
                loans.end());
    state_.owners.erase(id);
    for (auto it = state_.arb_position.begin(); it != state_.arb_position.end();) {
        it = it->second == id ? state_.arb_position.erase(it) : std::next(it);
    }
    refresh_open_interest();
}

void Simulator::refresh_open_interest()
{
    for (std::size_t k = 0; k < state_.markets.size(); ++k) {
        double L = 0.0;
        double S = 0.0;
        for (const auto& pos : state_.positions) {
            if (pos.asset != config_.markets[k].asset) {
                continue;
            }
            (pos.side() == perp::Side::Long ? L : S) += pos.size;
        }
        state_.markets[k].long_oi = L;
        state_.markets[k].short_oi = S;
    }
}

void Simulator::liquidate(const PriceVector& p, PeriodMetrics& m)
{
    const perp::ScanResult scan = perp::liquidation_scan(state_.positions, state_.history);
    double shortfall = 0.0;
    std::vector<std::uint64_t> removed;
    for (const auto& group : {&scan.liquidated, &scan.stale}) {
        for (const auto& pos : *group) {
            const double loss = pos.sign() * pos.size * (pos.entry_price - p[pos.asset]);
            shortfall += std::max(0.0, loss - pos.collateral);
            removed.push_back(pos.id);
        }
    }
    for (auto id : removed) {
        close_position(id);
    }
    m.liquidations = static_cast<int>(removed.size());
    if (shortfall > 0.0) {
        const Vec ra = pool::available(state_.pool);
        const double ra_value = value_at(p, ra);
        if (shortfall > ra_value) {
            throw InsolvencyError("period " + std::to_string(m.period) + ", step 2 (liquidations): shortfall " +
                                  std::to_string(shortfall) + " exceeds available value " + std::to_string(ra_value));
        }
        // Fully drained components land exactly on the loan book.
        const Vec loans = state_.pool.total_loans();
        state_.pool.reserves = (state_.pool.reserves - ra * (shortfall / ra_value)).cwiseMax(loans);
    }
    m.liquidation_shortfall = shortfall;
}

void Simulator::pay_funding(const PriceVector& p, PeriodMetrics& m)
{
    for (std::size_t k = 0; k < state_.markets.size(); ++k) {
        const auto market = state_.markets[k];
        if (!(market.long_oi > 0.0) || !(market.short_oi > 0.0)) {
            continue;
        }
        const int asset = config_.markets[k].asset;
        std::vector<perp::TraderPosition> book;
        for (const auto& pos : state_.positions) {
            if (pos.asset == asset) {
                book.push_back(pos);
            }
        }
        const perp::FundingUpdate upd = perp::apply_funding(market, p[asset], book);
        m.funding_rate[static_cast<Eigen::Index>(k)] = upd.rate;
        std::vector<std::uint64_t> emptied;
        for (const auto& pay : upd.payouts) {
            for (auto& pos : state_.positions) {
                if (pos.id == pay.position_id) {
                    pos.size += pay.size_change;
                    if (!(pos.size > 0.0)) {
                        emptied.push_back(pos.id);
                    }
                }
            }
        }
        for (auto id : emptied) {
            close_position(id);
        }
        refresh_open_interest();
    }
}

void Simulator::accrue_fees(const PriceVector& p, PeriodMetrics& m)
{
    const Vec loans = state_.pool.total_loans();
    const Vec fees = state_.pool.fee * loans;
    state_.pool.reserves += fees;
    m.fees_accrued += value_at(p, fees);
}

void Simulator::swap_arbitrage(const PriceVector& p, PeriodMetrics& m)
{
    if (!config_.agents.swap_arbitrageur) {
        return;
    }
    const PriceVector& p_prev = state_.history[state_.history.size() - 2];
    const int num = config_.numeraire;
    for (const auto& spec : config_.markets) {
        if (!(spec.swap_depth > 0.0)) {
            continue;
        }
        const int j = spec.asset;
        const auto G = arb::ConstantProductExchange::at_price(spec.swap_depth, p_prev[j]);
        const Vec ra = pool::available(state_.pool);
        const Vec before = state_.pool.reserves;
        if (p[j] > p_prev[j]) {
            const arb::SwapArb a = arb::optimal_swap_arb(G, p[j]);
            double x = a.x;
            double out = G.value(x);
            const bool clipped = out >= ra[j];
            if (clipped) {
                out = ra[j];
                x = G.r1() * out / (G.r2() - out);
            }
            state_.pool.reserves[num] += x;
            state_.pool.reserves[j] = clipped ? state_.pool.total_loans()[j] : before[j] - out;
        } else if (p[j] < p_prev[j]) {
            const arb::SwapArb a = arb::optimal_reverse_swap_arb(G, p[j]);
            double y = a.x;
            double out = a.out;
            const bool clipped = out >= ra[num];
            if (clipped) {
                out = ra[num];
                y = G.r2() * out / (G.r1() - out);
            }
            state_.pool.reserves[j] += y;
            state_.pool.reserves[num] = clipped ? state_.pool.total_loans()[num] : before[num] - out;
        }
        m.rebalancing_loss += value_at(p, state_.pool.reserves - before);
    }
    // Rounding can push an exact-zero loss a hair above zero.
    m.rebalancing_loss = std::min(m.rebalancing_loss, 0.0);
}

double Simulator::twm_arbitrage(const PriceVector& p, PeriodMetrics& m)
{
    if (!config_.agents.twm_arbitrageur) {
        return 0.0;
    }
    auto& pool = state_.pool;
    const Vec ra = pool::available(pool);
    arb::SolverOptions opts;
    opts.deposits_only = config_.agents.twm_deposits_only;
    opts.trade_cap_fraction = config_.agents.twm_trade_cap;
    opts.max_iterations = config_.agents.twm_max_iterations;
    opts.probes = 16;
    opts.restarts = 2;
    opts.seed = config_.seed * 1000003ULL + static_cast<std::uint64_t>(m.period);
    const arb::CreationSolution create =
        arb::solve_creation_arb(discount_, p, pool.target_weights, pool.reserves, ra, opts);
    const arb::RedemptionSolution redeem =
        arb::solve_redemption_arb(discount_, p, pool.target_weights, pool.reserves, ra, pool.shares, opts);
    const double threshold = std::max(config_.agents.twm_min_profit, 1e-12 * value_at(p, pool.reserves));
    const double value = value_at(p, pool.reserves);
    const double share_price = value / pool.shares;
    double legacy_sold = 0.0;

    if (create.objective > threshold && create.objective >= redeem.objective) {
        const pool::CreationResult res = pool::create_shares(pool, p, create.delta, discount_);
        const double paid = value_at(p, create.delta);
        if (res.minted >= 0.0) {
            const double post_share = value_at(p, res.pool.reserves) / res.pool.shares;
            m.twm_dilution = res.minted * post_share - paid;
        } else {
            legacy_sold = -res.minted;
            m.twm_dilution = -paid - legacy_sold * share_price;
        }
        pool = res.pool;
        m.twm_action = 1;
    } else if (redeem.objective > threshold) {
        const pool::RedemptionResult res = pool::redeem_shares(pool, p, redeem.sigma, redeem.lambda, discount_);
        if (res.valid) {
            legacy_sold = redeem.sigma;
            m.twm_dilution = value_at(p, redeem.lambda) - redeem.sigma * share_price;
            pool = res.pool;
            m.twm_action = 2;
        }
    }
    if ((pool.reserves.array() < 0.0).any()) {
        throw InsolvencyError("period " + std::to_string(m.period) + ", step 5 (LP updates): reserves went negative");
    }
    return legacy_sold * share_price;
}

void Simulator::hedge_rebalance(const PriceVector& p, PeriodMetrics& m)
{
    if (!config_.agents.hedged_lp) {
        return;
    }
    const auto& g = config_.prices.gbm;
    std::vector<int> risky;
    for (Eigen::Index i = 0; i < g.volatility.size(); ++i) {
        if (g.volatility[i] > 0.0) {
            risky.push_back(static_cast<int>(i));
        }
    }
    if (risky.empty()) {
        return;
    }
    const auto k = static_cast<Eigen::Index>(risky.size());
    auto pick = [&](const Vec& v) {
        Vec out(k);
        for (Eigen::Index i = 0; i < k; ++i) {
            out[i] = v[risky[static_cast<std::size_t>(i)]];
        }
        return out;
    };
    Mat corr(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = 0; b < k; ++b) {
            corr(a, b) = g.correlation(risky[static_cast<std::size_t>(a)], risky[static_cast<std::size_t>(b)]);
        }
    }
    const double share = state_.lp_shares / state_.pool.shares;
    const hedge::GbmPriceModel model(PriceVector(pick(p.values())), pick(g.drift), pick(g.volatility), corr);
    hedge::HedgeProblem prob;
    prob.fee = state_.pool.fee;
    prob.loans = share * pick(state_.pool.total_loans());
    prob.current_hedge = pick(state_.hedge);
    prob.rebalance_costs = pick(config_.agents.rebalance_costs);
    prob.risk_aversion = config_.agents.risk_aversion;
    prob.covariance = model.covariance();
    prob.portfolio_delta = share * pick(state_.pool.reserves);
    prob.reserves = prob.portfolio_delta;
    const hedge::SharpeReport rep = hedge::sharpe_conditions(prob, model);
    const Vec move = rep.hedge - prob.current_hedge;
    state_.hedge_costs += 0.5 * move.dot(prob.rebalance_costs.cwiseProduct(move));
    for (Eigen::Index i = 0; i < k; ++i) {
        state_.hedge[risky[static_cast<std::size_t>(i)]] = rep.hedge[i];
    }
    m.sharpe_condition1 = rep.condition1 ? 1 : 0;
    m.sharpe_condition2 = rep.condition2 ? 1 : 0;
}

void Simulator::trade(const PriceVector& p, PeriodMetrics& m)
{
    const PriceVector& p_prev = state_.history[state_.history.size() - 2];
    if (config_.agents.funding_arbitrageur) {
        for (std::size_t k = 0; k < state_.markets.size(); ++k) {
            if (auto it = state_.arb_position.find(static_cast<int>(k)); it != state_.arb_position.end()) {
                close_position(it->second);
            }
            const auto& market = state_.markets[k];
            const int j = config_.markets[k].asset;
            const double L = market.long_oi;
            const double S = market.short_oi;
            if (L == 0.0 && S == 0.0) {
                continue;
            }
            const double size = arb::funding_arb_size(L, S, p[j], p_prev[j]);
            const double lev = config_.agents.funding_leverage;
            if (size > 0.0 && open_position(p, static_cast<int>(k), size, lev, Owner::FundingArbitrageur)) {
                state_.arb_position[static_cast<int>(k)] = state_.next_id - 1;
                if (L > 0.0) {
                    m.funding_arb_pnl +=
                        arb::funding_arb_profit(size, state_.pool.fee, market.kappa, L, p[j], p_prev[j]);
                }
            } else if (size < 0.0 &&
                       open_position(p, static_cast<int>(k), -size, -lev, Owner::FundingArbitrageur)) {
                state_.arb_position[static_cast<int>(k)] = state_.next_id - 1;
                if (S > 0.0) {
                    m.funding_arb_pnl +=
                        arb::funding_arb_profit_short(-size, state_.pool.fee, market.kappa, S, p[j], p_prev[j]);
                }
            }
        }
    }
    if (config_.agents.noise_traders && !state_.markets.empty()) {
        std::vector<std::uint64_t> closing;
        std::bernoulli_distribution close(0.1);
        for (const auto& [id, owner] : state_.owners) {
            if (owner == Owner::Noise && close(state_.rng)) {
                closing.push_back(id);
            }
        }
        for (auto id : closing) {
            close_position(id);
        }
        std::poisson_distribution<int> count(config_.agents.noise_intensity);
        std::exponential_distribution<double> size(1.0 / config_.agents.noise_mean_size);
        std::uniform_int_distribution<std::size_t> which(0, state_.markets.size() - 1);
        std::bernoulli_distribution go_long(0.5);
        const int trades = count(state_.rng);
        for (int t = 0; t < trades; ++t) {
            const auto k = which(state_.rng);
            const double lev = go_long(state_.rng) ? config_.agents.noise_leverage : -config_.agents.noise_leverage;
            open_position(p, static_cast<int>(k), size(state_.rng), lev, Owner::Noise);
        }
    }
}

void Simulator::report_fee_band(const PriceVector& p, const Vec& long_oi_start, PeriodMetrics& m)
{
    const PriceVector& p_prev = state_.history[state_.history.size() - 2];
    for (std::size_t k = 0; k < config_.markets.size(); ++k) {
        const auto& spec = config_.markets[k];
        if (!(spec.swap_depth > 0.0)) {
            continue;
        }
        const int j = spec.asset;
        const double L0 = long_oi_start[static_cast<Eigen::Index>(k)];
        const double ratio = p[j] / p_prev[j];
        if (L0 > 0.0 && ratio > 1.0 && ratio <= config_.price_bound) {
            const auto G = arb::ConstantProductExchange::at_price(spec.swap_depth, p_prev[j]);
            const arb::FeeBand band = arb::fee_band(spec.kappa, L0, config_.price_bound, G, p[j], p_prev[j]);
            m.fee_band_state = band.contains(state_.pool.fee) ? 1 : 0;
        }
        return;
    }
}

PeriodMetrics Simulator::step(const PriceVector& p_next)
{
    if (p_next.size() != config_.n_assets()) {
        throw InvalidArgumentError("price vector dimension does not match the scenario");
    }
    const PriceVector p_prev = state_.history.back();
    const auto n_markets = static_cast<Eigen::Index>(state_.markets.size());
    PeriodMetrics m;
    m.period = state_.period + 1;
    m.funding_rate = Vec::Zero(n_markets);
    m.post_funding_rate = Vec::Zero(n_markets);
    m.long_oi = Vec::Zero(n_markets);
    m.short_oi = Vec::Zero(n_markets);
    Vec long_oi_start(n_markets);
    double total_long = 0.0;
    for (Eigen::Index k = 0; k < n_markets; ++k) {
        long_oi_start[k] = state_.markets[static_cast<std::size_t>(k)].long_oi;
        total_long += long_oi_start[k];
    }
    if (config_.fee_policy.dynamic && total_long > 0.0) {
        state_.pool.fee =
            std::clamp(config_.fee_policy.theta / total_long, config_.fee_policy.min_fee, config_.fee_policy.max_fee);
    }
    m.fee = state_.pool.fee;

    const Vec R0 = state_.pool.reserves;
    const double V0 = value_at(p_prev, R0);
    const double legacy_shares = state_.pool.shares;
    m.revaluation = value_at(p_next, R0) - V0;

    // (1) oracle update
    state_.history.push_back(p_next);
    state_.hedge_pnl += state_.hedge.dot(p_next.values() - p_prev.values());
    // (2) liquidations
    liquidate(p_next, m);
    // (3) funding
    pay_funding(p_next, m);
    // (4) lending fees
    if (config_.fee_timing == FeeTiming::BeforeLpUpdates) {
        accrue_fees(p_next, m);
    }
    // (5) LP updates
    swap_arbitrage(p_next, m);
    const double shares_before_twm = state_.pool.shares;
    const double legacy_cash = twm_arbitrage(p_next, m);
    double legacy_remaining = legacy_shares;
    if (m.twm_action != 0 && state_.pool.shares < shares_before_twm) {
        legacy_remaining -= shares_before_twm - state_.pool.shares;
    }
    hedge_rebalance(p_next, m);
    // (6) trades
    trade(p_next, m);
    if (config_.fee_timing == FeeTiming::EndOfStep) {
        accrue_fees(p_next, m);
    }

    for (Eigen::Index k = 0; k < n_markets; ++k) {
        auto& market = state_.markets[static_cast<std::size_t>(k)];
        m.long_oi[k] = market.long_oi;
        m.short_oi[k] = market.short_oi;
        if (market.short_oi > 0.0) {
            m.post_funding_rate[k] = perp::funding_rate(market, p_next[config_.markets[static_cast<std::size_t>(k)].asset]);
        }
    }
    report_fee_band(p_next, long_oi_start, m);
    for (std::size_t k = 0; k < state_.markets.size(); ++k) {
        state_.markets[k].mark_price = p_next[config_.markets[k].asset];
    }

    (void)pool::available(state_.pool);
    m.prices = p_next.values();
    m.pool_value = value_at(p_next, state_.pool.reserves);
    m.share_value = m.pool_value / state_.pool.shares;
    m.lp_value = state_.lp_shares * m.share_value;
    m.hedged_lp_value = m.lp_value + state_.hedge_pnl - state_.hedge_costs;
    m.lp_profit = m.fees_accrued + m.rebalancing_loss;

    // Value of the holders present at the start of the period, from share
    // arithmetic, against the sum of the per-step value flows.
    const double legacy_value = m.pool_value * (legacy_remaining / state_.pool.shares) + legacy_cash;
    const double flows =
        m.revaluation + m.fees_accrued + m.rebalancing_loss - m.twm_dilution - m.liquidation_shortfall;
    m.accounting_residual = ((legacy_value - V0) - flows) / std::max(std::abs(V0), 1e-300);

    state_.period = m.period;
    return m;
}

double sharpe_of_changes(const std::vector<double>& values)
{
    if (values.size() < 3) {
        return 0.0;
    }
    std::vector<double> d(values.size() - 1);
    for (std::size_t i = 1; i < values.size(); ++i) {
        d[i - 1] = values[i] - values[i - 1];
    }
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
    double ss = 0.0;
    for (double x : d) {
        ss += (x - mean) * (x - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(d.size() - 1));
    return sd > 0.0 ? mean / sd : 0.0;
}

nlohmann::json RunSummary::to_json() const
{
    return {{"scenario", scenario},
            {"seed", seed},
            {"fee_timing", fee_timing},
            {"periods", periods},
            {"total_fee_revenue", total_fee_revenue},
            {"total_rebalancing_loss", total_rebalancing_loss},
            {"total_twm_dilution", total_twm_dilution},
            {"total_liquidation_shortfall", total_liquidation_shortfall},
            {"total_liquidations", total_liquidations},
            {"funding_arb_pnl", funding_arb_pnl},
            {"lp_pnl", lp_pnl},
            {"hedged_lp_pnl", hedged_lp_pnl},
            {"lp_sharpe", lp_sharpe},
            {"hedged_lp_sharpe", hedged_lp_sharpe},
            {"fee_band_occupancy", fee_band_occupancy},
            {"fee_band_periods", fee_band_periods},
            {"sharpe_conditions_held", sharpe_conditions_held},
            {"sharpe_conditions_checked", sharpe_conditions_checked},
            {"max_accounting_residual", max_accounting_residual},
            {"final_pool", final_pool}};
}

RunResult run(const ScenarioConfig& config)
{
    Simulator sim(config);
    std::vector<PriceVector> path;
    if (config.prices.kind == PriceProcessSpec::Kind::Gbm) {
        path = gbm_paths(config.prices.gbm, config.horizon, config.seed);
    } else {
        for (int t = 0; t <= config.horizon; ++t) {
            path.emplace_back(config.prices.path[static_cast<std::size_t>(t)]);
        }
    }
    RunResult out;
    RunSummary& s = out.summary;
    s.scenario = config.name;
    s.seed = config.seed;
    s.fee_timing = to_string(config.fee_timing);
    std::vector<double> lp{sim.state().initial_lp_value};
    std::vector<double> hedged{sim.state().initial_lp_value};
    int in_band = 0;
    for (int t = 1; t <= config.horizon; ++t) {
        PeriodMetrics m = sim.step(path[static_cast<std::size_t>(t)]);
        s.total_fee_revenue += m.fees_accrued;
        s.total_rebalancing_loss += m.rebalancing_loss;
        s.total_twm_dilution += m.twm_dilution;
        s.total_liquidation_shortfall += m.liquidation_shortfall;
        s.total_liquidations += m.liquidations;
        s.funding_arb_pnl += m.funding_arb_pnl;
        if (m.fee_band_state >= 0) {
            ++s.fee_band_periods;
            in_band += m.fee_band_state;
        }
        if (m.sharpe_condition1 >= 0) {
            ++s.sharpe_conditions_checked;
            if (m.sharpe_condition1 == 1 && m.sharpe_condition2 == 1) {
                ++s.sharpe_conditions_held;
            }
        }
        s.max_accounting_residual = std::max(s.max_accounting_residual, std::abs(m.accounting_residual));
        lp.push_back(m.lp_value);
        hedged.push_back(m.hedged_lp_value);
        out.periods.push_back(std::move(m));
    }
    s.periods = config.horizon;
    s.lp_pnl = lp.back() - lp.front();
    s.hedged_lp_pnl = hedged.back() - hedged.front();
    s.lp_sharpe = sharpe_of_changes(lp);
    s.hedged_lp_sharpe = sharpe_of_changes(hedged);
    s.fee_band_occupancy = s.fee_band_periods > 0 ? static_cast<double>(in_band) / s.fee_band_periods : 0.0;
    s.final_pool = pool::to_json(sim.state().pool);
    return out;
}

void write_metrics_csv(std::ostream& os, const std::vector<PeriodMetrics>& periods)
{
    if (periods.empty()) {
        os << "period\n";
        return;
    }
    const auto n = periods.front().prices.size();
    const auto k = periods.front().funding_rate.size();
    os << "period";
    for (Eigen::Index i = 0; i < n; ++i) {
        os << ",price_" << i;
    }
    for (Eigen::Index i = 0; i < k; ++i) {
        os << ",funding_rate_" << i << ",post_funding_rate_" << i << ",long_oi_" << i << ",short_oi_" << i;
    }
    os << ",fee,fees_accrued,rebalancing_loss,twm_dilution,twm_action,liquidation_shortfall,liquidations,revaluation,"
          "pool_value,share_value,lp_value,hedged_lp_value,funding_arb_pnl,lp_profit,fee_band_state,"
          "sharpe_condition1,sharpe_condition2,accounting_residual\n";
    std::ostringstream line;
    line.precision(17);
    for (const auto& m : periods) {
        line.str("");
        line << m.period;
        for (Eigen::Index i = 0; i < n; ++i) {
            line << ',' << m.prices[i];
        }
        for (Eigen::Index i = 0; i < k; ++i) {
            line << ',' << m.funding_rate[i] << ',' << m.post_funding_rate[i] << ',' << m.long_oi[i] << ','
                 << m.short_oi[i];
        }
        line << ',' << m.fee << ',' << m.fees_accrued << ',' << m.rebalancing_loss << ',' << m.twm_dilution << ','
             << m.twm_action << ',' << m.liquidation_shortfall << ',' << m.liquidations << ',' << m.revaluation << ','
             << m.pool_value << ',' << m.share_value << ',' << m.lp_value << ',' << m.hedged_lp_value << ','
             << m.funding_arb_pnl << ',' << m.lp_profit << ',' << m.fee_band_state << ',' << m.sharpe_condition1
             << ',' << m.sharpe_condition2 << ',' << m.accounting_residual << '\n';
        os << line.str();
    }
}

void write_run(const RunResult& result, const std::string& out_dir)
{
    std::filesystem::create_directories(out_dir);
    const std::string stem =
        (std::filesystem::path(out_dir) / (result.summary.scenario + "." + std::to_string(result.summary.seed))).string();
    {
        std::ofstream csv(stem + ".csv", std::ios::binary);
        if (!csv) {
            throw Error("cannot write '" + stem + ".csv'");
        }
        write_metrics_csv(csv, result.periods);
    }
    std::ofstream js(stem + ".json", std::ios::binary);
    if (!js) {
        throw Error("cannot write '" + stem + ".json'");
    }
    js << result.summary.to_json().dump(2) << '\n';
}

} // namespace pdlp::sim
