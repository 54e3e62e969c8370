#include "pdlp/arbitrage.hpp"
#include "pdlp/errors.hpp"
#include "pdlp/simulator.hpp"

#include "gen.hpp"

#include "doctest.h"

#include <cmath>
#include <sstream>

using namespace pdlp;
using namespace pdlp::sim;

namespace {

// Two-asset pool quoting asset 1 at p0 against a numéraire, with an explicit
// price path.
ScenarioConfig base_config(std::vector<double> asset_path)
{
    ScenarioConfig c;
    c.name = "unit";
    c.horizon = static_cast<int>(asset_path.size()) - 1;
    c.asset_names = {"USD", "ETH"};
    c.prices.kind = PriceProcessSpec::Kind::Path;
    for (double p : asset_path) {
        c.prices.path.push_back(make_vec({1.0, p}));
    }
    c.pool.reserves = make_vec({2e6, 1000});
    c.pool.target_weights = make_vec({0.5, 0.5});
    c.pool.fee = 1e-4;
    c.pool.shares = 1e6;
    c.price_bound = 1.2;
    return c;
}

MarketSpec market(double L, double S, double depth = 0.0)
{
    MarketSpec m;
    m.asset = 1;
    m.kappa = 0.05;
    m.long_oi = L;
    m.short_oi = S;
    m.leverage = 2.0;
    m.swap_depth = depth;
    return m;
}

} // namespace

TEST_CASE("GBM paths without volatility follow the drift")
{
    GbmSpec spec;
    spec.initial_prices = make_vec({1, 100});
    spec.drift = make_vec({0, 0.01});
    spec.volatility = make_vec({0, 0});
    spec.correlation = Mat::Identity(2, 2);
    const auto paths = gbm_paths(spec, 10, 5);
    REQUIRE(paths.size() == 11);
    for (int t = 0; t <= 10; ++t) {
        CHECK(paths[static_cast<std::size_t>(t)][1] == doctest::Approx(100 * std::exp(0.01 * t)).epsilon(1e-12));
        CHECK(paths[static_cast<std::size_t>(t)][0] == 1.0);
    }
}

TEST_CASE("GBM log-returns have the lognormal drift")
{
    GbmSpec spec;
    spec.initial_prices = make_vec({1.0});
    spec.drift = make_vec({0.001});
    spec.volatility = make_vec({0.02});
    spec.correlation = Mat::Identity(1, 1);
    const int T = 100000;
    const auto paths = gbm_paths(spec, T, 17);
    double sum = 0.0;
    for (int t = 1; t <= T; ++t) {
        sum += std::log(paths[static_cast<std::size_t>(t)][0] / paths[static_cast<std::size_t>(t - 1)][0]);
    }
    const double mean = sum / T;
    const double expected = 0.001 - 0.5 * 0.02 * 0.02;
    CHECK(std::abs(mean - expected) <= 3 * 0.02 / std::sqrt(static_cast<double>(T)));
}

TEST_CASE("GBM paths are reproducible and seed-dependent")
{
    GbmSpec spec;
    spec.initial_prices = make_vec({1, 50, 3});
    spec.drift = Vec::Zero(3);
    spec.volatility = make_vec({0, 0.02, 0.03});
    spec.correlation = (Mat(3, 3) << 1, 0, 0, 0, 1, 0.5, 0, 0.5, 1).finished();
    const auto a = gbm_paths(spec, 50, 9);
    const auto b = gbm_paths(spec, 50, 9);
    const auto c = gbm_paths(spec, 50, 10);
    for (std::size_t t = 0; t < a.size(); ++t) {
        CHECK(a[t].values() == b[t].values());
    }
    CHECK(a[50].values() != c[50].values());
}

TEST_CASE("GBM rejects an indefinite correlation")
{
    GbmSpec spec;
    spec.initial_prices = make_vec({1, 1, 1});
    spec.drift = Vec::Zero(3);
    spec.volatility = Vec::Constant(3, 0.1);
    spec.correlation = (Mat(3, 3) << 1, 0.9, -0.9, 0.9, 1, 0.9, -0.9, 0.9, 1).finished();
    CHECK_THROWS_AS(gbm_paths(spec, 5, 1), ConfigError);
}

TEST_CASE("constant prices without agents leave the pool invariant")
{
    const auto cfg = base_config({2000, 2000, 2000, 2000});
    const auto res = run(cfg);
    REQUIRE(res.periods.size() == 3);
    for (const auto& m : res.periods) {
        CHECK(m.fees_accrued == 0.0);
        CHECK(m.rebalancing_loss == 0.0);
        CHECK(m.twm_dilution == 0.0);
        CHECK(m.liquidations == 0);
        CHECK(m.revaluation == 0.0);
        CHECK(m.pool_value == doctest::Approx(4e6));
    }
}

TEST_CASE("one horizon period is one step")
{
    auto cfg = base_config({2000, 2100});
    cfg.markets.push_back(market(100, 100, 2e5));
    cfg.agents.swap_arbitrageur = true;
    const auto res = run(cfg);
    CHECK(res.periods.size() == 1);
    CHECK(res.summary.periods == 1);
}

TEST_CASE("funding arbitrageur rebalances the book to zero funding")
{
    auto cfg = base_config({2000, 2200});
    cfg.markets.push_back(market(100, 100));
    cfg.agents.funding_arbitrageur = true;
    cfg.agents.funding_leverage = 5.0;
    const auto res = run(cfg);
    const auto& m = res.periods.at(0);
    CHECK(std::abs(m.post_funding_rate[0]) <= 1e-12);
    CHECK(m.long_oi[0] / m.short_oi[0] == doctest::Approx(1.1).epsilon(1e-12));
}

TEST_CASE("swap arbitrageur loss matches the constant-product closed form")
{
    const double depth = 2e5;
    const double p0 = 2000;
    const double p = 2100;
    auto cfg = base_config({p0, p});
    cfg.markets.push_back(market(0, 0, depth));
    cfg.agents.swap_arbitrageur = true;
    const auto res = run(cfg);
    const double R1 = depth;
    const double R2 = depth / p0;
    const double expected = -(R1 + p * R2 - 2 * std::sqrt(p * R1 * R2));
    CHECK(res.periods.at(0).rebalancing_loss == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("accounting identity closes on mixed agents")
{
    auto cfg = base_config({2000, 2050, 1980, 2100, 2150, 1900, 1950});
    cfg.markets.push_back(market(150, 120, 2e5));
    cfg.agents.funding_arbitrageur = true;
    cfg.agents.swap_arbitrageur = true;
    cfg.agents.noise_traders = true;
    cfg.agents.noise_mean_size = 2.0;
    cfg.lp_share_fraction = 0.1;
    for (auto timing : {FeeTiming::BeforeLpUpdates, FeeTiming::EndOfStep}) {
        cfg.fee_timing = timing;
        const auto res = run(cfg);
        for (const auto& m : res.periods) {
            CHECK(std::abs(m.accounting_residual) <= 1e-9);
            CHECK(m.fees_accrued >= 0.0);
            CHECK(m.rebalancing_loss <= 0.0);
        }
    }
}

TEST_CASE("accounting identity closes with a hedged LP under GBM prices")
{
    auto cfg = base_config({2000, 2000});
    cfg.horizon = 60;
    cfg.prices.kind = PriceProcessSpec::Kind::Gbm;
    cfg.prices.gbm.initial_prices = make_vec({1, 2000});
    cfg.prices.gbm.drift = make_vec({0, 0});
    cfg.prices.gbm.volatility = make_vec({0, 0.01});
    cfg.prices.gbm.correlation = Mat::Identity(2, 2);
    cfg.markets.push_back(market(150, 120, 2e5));
    cfg.agents.swap_arbitrageur = true;
    cfg.agents.funding_arbitrageur = true;
    cfg.agents.hedged_lp = true;
    cfg.agents.rebalance_costs = make_vec({0, 0.01});
    cfg.lp_share_fraction = 0.1;
    const auto res = run(cfg);
    CHECK(res.summary.sharpe_conditions_checked == 60);
    for (const auto& m : res.periods) {
        CHECK(std::abs(m.accounting_residual) <= 1e-9);
        CHECK(m.sharpe_condition1 >= 0);
    }
}

TEST_CASE("runs are deterministic and write the documented columns")
{
    auto cfg = base_config({2000, 2050, 1980, 2100});
    cfg.markets.push_back(market(150, 120, 2e5));
    cfg.agents.swap_arbitrageur = true;
    cfg.agents.noise_traders = true;
    const auto a = run(cfg);
    const auto b = run(cfg);
    std::ostringstream sa;
    std::ostringstream sb;
    write_metrics_csv(sa, a.periods);
    write_metrics_csv(sb, b.periods);
    CHECK(sa.str() == sb.str());
    CHECK(a.summary.to_json().dump() == b.summary.to_json().dump());
    const std::string header = sa.str().substr(0, sa.str().find('\n'));
    for (const char* col : {"period", "pool_value", "lp_value", "hedged_lp_value", "fees_accrued", "rebalancing_loss"}) {
        CHECK(header.find(col) != std::string::npos);
    }
}

TEST_CASE("Sharpe of value changes")
{
    CHECK(sharpe_of_changes({1, 1, 1}) == 0.0);
    CHECK(sharpe_of_changes({}) == 0.0);
    // Changes 1, 3: mean 2, sample stdev √2.
    CHECK(sharpe_of_changes({0, 1, 4}) == doctest::Approx(2 / std::sqrt(2.0)));
}
