#include "pdlp/pool.hpp"

#include "pdlp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pdlp::pool {

Vec PoolState::total_loans() const
{
    Vec total = Vec::Zero(reserves.size());
    for (const auto& loan : loans) {
        total += loan.amount;
    }
    return total;
}

void PoolState::validate() const
{
    const auto n = reserves.size();
    if (n == 0) {
        throw InvalidArgumentError("pool needs at least one asset");
    }
    if ((reserves.array() < 0.0).any()) {
        throw InvalidArgumentError("reserves must be nonnegative");
    }
    if (target_weights.size() != n) {
        throw InvalidArgumentError("target weights dimension does not match reserves");
    }
    if ((target_weights.array() < 0.0).any() || std::abs(target_weights.sum() - 1.0) > 1e-9) {
        throw InvalidArgumentError("target weights must lie on the unit simplex");
    }
    if (!(shares > 0.0)) {
        throw InvalidArgumentError("shares outstanding must be positive");
    }
    if (!(fee > 0.0 && fee < 1.0)) {
        throw InvalidArgumentError("lending fee must lie in (0,1)");
    }
    for (const auto& loan : loans) {
        if (loan.amount.size() != n || (loan.amount.array() < 0.0).any()) {
            throw InvalidArgumentError("loan " + std::to_string(loan.position_id) + " is malformed");
        }
    }
    (void)available(*this);
}

Vec weights(const PriceVector& p, const Vec& R)
{
    if (p.size() != R.size()) {
        throw InvalidArgumentError("price and reserve dimensions differ");
    }
    const double value = p.values().dot(R);
    if (!(value > 0.0)) {
        throw UndefinedWeights("weights undefined for an empty pool");
    }
    return p.values().cwiseProduct(R) / value;
}

Vec available(const PoolState& pool)
{
    Vec ra = pool.reserves - pool.total_loans();
    for (Eigen::Index i = 0; i < ra.size(); ++i) {
        if (ra[i] < 0.0) {
            throw InsolvencyError("loans exceed reserves of asset " + std::to_string(i));
        }
    }
    return ra;
}

double portfolio_value(const PriceVector& p, const Vec& R)
{
    if (p.size() != R.size()) {
        throw InvalidArgumentError("price and reserve dimensions differ");
    }
    return p.values().dot(R);
}

double diluted_value(const PriceVector& p, const Vec& R, const Vec& loans, double fee, double discount)
{
    if (!(discount > -1.0)) {
        throw InvalidDiscount("discount must exceed -1, got " + std::to_string(discount));
    }
    return portfolio_value(p, R) / (1.0 + discount) + fee * p.values().dot(loans);
}

bool values_match(double a, double b, double rel_tol)
{
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) <= rel_tol * scale || a == b;
}

CreationResult create_shares(const PoolState& pool, const PriceVector& p, const Vec& delta, const twm::DiscountFn& F)
{
    if (delta.size() != pool.n_assets()) {
        throw InvalidArgumentError("deposit dimension does not match the pool");
    }
    const Vec ra = available(pool);
    for (Eigen::Index i = 0; i < delta.size(); ++i) {
        if (delta[i] < -ra[i]) {
            throw WithdrawalExceedsAvailable("update withdraws more of asset " + std::to_string(i) +
                                             " than is available");
        }
    }
    CreationResult out;
    out.pool = pool;
    if (delta.isZero(0.0)) {
        return out;
    }
    out.discount = F.evaluate(p, pool.target_weights, pool.reserves, delta);
    const Vec after = pool.reserves + delta;
    const double deposit_value = p.values().dot(delta);
    const double after_value = portfolio_value(p, after);
    if (!(after_value > 0.0)) {
        throw UndefinedWeights("update empties the pool");
    }
    out.value_received = (1.0 + out.discount) * deposit_value;
    out.fraction = out.value_received / after_value;
    if (!(out.fraction < 1.0)) {
        throw InvalidDiscount("depositor would own the whole pool");
    }
    out.minted = out.fraction * pool.shares / (1.0 - out.fraction);
    out.pool.reserves = after;
    out.pool.shares = pool.shares + out.minted;
    if (!(out.pool.shares > 0.0)) {
        throw OverRedemption("update burns every outstanding share");
    }
    return out;
}

RedemptionResult redeem_shares(const PoolState& pool, const PriceVector& p, double sigma, const Vec& lambda,
                               const twm::DiscountFn& F)
{
    if (lambda.size() != pool.n_assets()) {
        throw InvalidArgumentError("basket dimension does not match the pool");
    }
    if (sigma < 0.0 || sigma > pool.shares) {
        throw OverRedemption("cannot redeem " + std::to_string(sigma) + " of " + std::to_string(pool.shares) +
                             " shares");
    }
    const Vec ra = available(pool);
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda[i] < 0.0) {
            throw InvalidArgumentError("redemption basket must be nonnegative");
        }
        if (lambda[i] > ra[i]) {
            throw WithdrawalExceedsAvailable("basket takes more of asset " + std::to_string(i) +
                                             " than is available");
        }
    }
    RedemptionResult out;
    out.pool = pool;
    out.discount = lambda.isZero(0.0) ? 0.0 : F.evaluate(p, pool.target_weights, pool.reserves, -lambda);
    if (!(out.discount > -1.0)) {
        throw InvalidDiscount("redemption discount must exceed -1");
    }
    out.required_value = (1.0 + out.discount) * (sigma / pool.shares) * portfolio_value(p, pool.reserves);
    out.basket_value = p.values().dot(lambda);
    out.valid = values_match(out.basket_value, out.required_value);
    if (out.valid) {
        out.pool.reserves = pool.reserves - lambda;
        out.pool.shares = pool.shares - sigma;
    }
    return out;
}

DeltaBoundReport check_delta_bound(const PriceVector& p, const Vec& R, const Vec& loans, double fee,
                                   const twm::DiscountFn& F, const Vec& target_weights, const Vec& delta, double slack)
{
    DeltaBoundReport rep;
    const double value = portfolio_value(p, R);
    rep.discount = F.evaluate(p, target_weights, R, delta);
    rep.price_gradient_F = F.price_gradient(p, target_weights, R, delta);
    const Vec threshold = 8.0 * fee * R / value;
    rep.gradient_hypothesis = (rep.price_gradient_F.array() >= threshold.array()).all();
    rep.discount_hypothesis = rep.discount <= 1.0;
    rep.loans_hypothesis = (loans.array() <= R.array()).all();
    rep.applicable = rep.gradient_hypothesis && rep.discount_hypothesis && rep.loans_hypothesis;

    auto v_new = [&](const PriceVector& q) {
        return diluted_value(q, R, loans, fee, F.evaluate(q, target_weights, R, delta));
    };
    rep.value_gradient.resize(p.size());
    for (Eigen::Index j = 0; j < p.size(); ++j) {
        const double h = 1e-6 * p[j];
        rep.value_gradient[j] = (v_new(p.with(j, p[j] + h)) - v_new(p.with(j, p[j] - h))) / (2.0 * h);
    }
    rep.bound = (0.5 - fee) * R;
    rep.margin = rep.bound - rep.value_gradient;
    rep.holds = (rep.margin.array() >= -slack).all();
    if (!rep.applicable) {
        std::string missing;
        if (!rep.gradient_hypothesis) {
            missing += " price-gradient";
        }
        if (!rep.discount_hypothesis) {
            missing += " F<=1";
        }
        if (!rep.loans_hypothesis) {
            missing += " loans<=R";
        }
        rep.note = "bound not applicable; unmet hypotheses:" + missing;
    } else {
        rep.note = rep.holds ? "bound holds" : "bound violated";
    }
    return rep;
}

namespace {

nlohmann::json vec_json(const Vec& v)
{
    return std::vector<double>(v.data(), v.data() + v.size());
}

Vec json_vec(const nlohmann::json& j, const char* what)
{
    if (!j.is_array()) {
        throw ConfigError(std::string("pool snapshot field '") + what + "' must be a list");
    }
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

} // namespace

nlohmann::json to_json(const PoolState& pool)
{
    nlohmann::json loans = nlohmann::json::array();
    for (const auto& loan : pool.loans) {
        loans.push_back({{"id", loan.position_id}, {"amount", vec_json(loan.amount)}});
    }
    return {{"reserves", vec_json(pool.reserves)},
            {"loans", loans},
            {"shares", pool.shares},
            {"target_weights", vec_json(pool.target_weights)},
            {"fee", pool.fee}};
}

PoolState pool_from_json(const nlohmann::json& j)
{
    PoolState pool;
    try {
        pool.reserves = json_vec(j.at("reserves"), "reserves");
        pool.target_weights = json_vec(j.at("target_weights"), "target_weights");
        pool.shares = j.at("shares").get<double>();
        pool.fee = j.at("fee").get<double>();
        for (const auto& loan : j.value("loans", nlohmann::json::array())) {
            pool.loans.push_back({loan.at("id").get<std::uint64_t>(), json_vec(loan.at("amount"), "loans.amount")});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed pool snapshot: ") + e.what());
    }
    try {
        pool.validate();
    } catch (const InvalidArgumentError& e) {
        throw ConfigError(std::string("invalid pool snapshot: ") + e.what());
    }
    return pool;
}

} // namespace pdlp::pool
