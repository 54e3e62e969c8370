#include "pdlp/errors.hpp"
#include "pdlp/pool.hpp"

#include "gen.hpp"

#include "doctest.h"

#include <cmath>

using namespace pdlp;
using namespace pdlp::pool;

namespace {

PoolState make_pool(Vec R, double shares = 100.0)
{
    PoolState pool;
    pool.reserves = std::move(R);
    pool.target_weights = Vec::Constant(pool.reserves.size(), 1.0 / static_cast<double>(pool.reserves.size()));
    pool.shares = shares;
    pool.fee = 0.01;
    return pool;
}

} // namespace

TEST_CASE("weights are price-weighted composition")
{
    CHECK(weights(PriceVector{1, 1}, make_vec({50, 50})).isApprox(make_vec({0.5, 0.5})));
    CHECK(weights(PriceVector{2000, 1}, make_vec({1, 2000})).isApprox(make_vec({0.5, 0.5})));
    CHECK(weights(PriceVector{1, 1, 1}, make_vec({1, 2, 3})).isApprox(make_vec({1.0 / 6, 2.0 / 6, 3.0 / 6})));
    CHECK_THROWS_AS(weights(PriceVector{1, 1}, make_vec({0, 0})), UndefinedWeights);
}

TEST_CASE("weights lie on the simplex")
{
    test::Gen gen(5);
    for (int i = 0; i < 500; ++i) {
        const auto n = gen.integer(1, 6);
        const auto w = weights(PriceVector(gen.vec(n, 0.1, 100)), gen.vec(n, 0.0, 10) + Vec::Constant(n, 1e-3));
        CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(w.minCoeff() >= 0.0);
    }
}

TEST_CASE("available reserves subtract outstanding loans")
{
    auto pool = make_pool(make_vec({10, 10}));
    CHECK(available(pool) == make_vec({10, 10}));
    pool.loans.push_back({1, make_vec({4, 0})});
    CHECK(available(pool) == make_vec({6, 10}));
    pool.loans.push_back({2, make_vec({6, 10})});
    CHECK(available(pool) == make_vec({0, 0}));
    pool.loans.push_back({3, make_vec({0, 1})});
    CHECK_THROWS_AS(available(pool), InsolvencyError);
}

TEST_CASE("portfolio and diluted values")
{
    CHECK(portfolio_value(PriceVector{1, 2}, make_vec({0, 0})) == 0.0);
    CHECK(portfolio_value(PriceVector{2000, 1}, make_vec({1, 2000})) == 4000.0);
    CHECK(portfolio_value(PriceVector{1, 2, 3}, make_vec({3, 2, 1})) == 10.0);

    const PriceVector p{1, 1};
    CHECK(diluted_value(p, make_vec({100, 100}), make_vec({0, 0}), 0.0, 0.0) == 200.0);
    CHECK(diluted_value(p, make_vec({100, 100}), make_vec({50, 50}), 0.01, 1.0) == doctest::Approx(101.0));
    CHECK(diluted_value(p, make_vec({100, 100}), make_vec({0, 0}), 0.0, 0.02) == doctest::Approx(200.0 / 1.02));
}

TEST_CASE("zero update mints nothing")
{
    const auto pool = make_pool(make_vec({50, 50}));
    const auto res = create_shares(pool, PriceVector{1, 1}, make_vec({0, 0}), twm::make_zero());
    CHECK(res.fraction == 0.0);
    CHECK(res.minted == 0.0);
    CHECK(res.pool.reserves == pool.reserves);
}

TEST_CASE("pro-rata deposit with zero discount takes half the doubled pool")
{
    const auto pool = make_pool(make_vec({50, 50}), 100.0);
    const auto res = create_shares(pool, PriceVector{1, 1}, make_vec({50, 50}), twm::make_zero());
    CHECK(res.fraction == doctest::Approx(0.5));
    CHECK(res.minted == doctest::Approx(100.0));
    CHECK(res.pool.shares == doctest::Approx(200.0));
    CHECK(res.value_received == doctest::Approx(100.0));
}

TEST_CASE("discounted deposit receives the discount on top of pro-rata")
{
    const auto pool = make_pool(make_vec({50, 50}), 100.0);
    const auto res = create_shares(pool, PriceVector{1, 1}, make_vec({50, 50}), twm::make_constant(0.02));
    CHECK(res.fraction == doctest::Approx(0.51));
    CHECK(res.minted == doctest::Approx(0.51 * 100.0 / 0.49));
    CHECK(res.value_received == doctest::Approx(102.0));
}

TEST_CASE("withdrawal beyond available reserves is rejected")
{
    auto pool = make_pool(make_vec({10, 10}));
    pool.loans.push_back({1, make_vec({4, 0})});
    CHECK_THROWS_AS(create_shares(pool, PriceVector{1, 1}, make_vec({-7, 0}), twm::make_zero()),
                    WithdrawalExceedsAvailable);
    CHECK_NOTHROW(create_shares(pool, PriceVector{1, 1}, make_vec({-6, 0}), twm::make_zero()));
}

TEST_CASE("redemption validity follows the discounted share value")
{
    const auto pool = make_pool(make_vec({200, 200}), 100.0);
    const PriceVector p{1, 1};

    CHECK(redeem_shares(pool, p, 0.0, make_vec({0, 0}), twm::make_zero()).valid);

    auto res = redeem_shares(pool, p, 25.0, make_vec({30, 70}), twm::make_zero());
    CHECK(res.valid);
    CHECK(res.pool.shares == doctest::Approx(75.0));
    CHECK(res.pool.reserves.isApprox(make_vec({170, 130})));
    CHECK_FALSE(redeem_shares(pool, p, 25.0, make_vec({30, 71}), twm::make_zero()).valid);

    res = redeem_shares(pool, p, 25.0, make_vec({51, 51}), twm::make_constant(0.02));
    CHECK(res.valid);
    CHECK(res.required_value == doctest::Approx(102.0));
    CHECK_FALSE(redeem_shares(pool, p, 25.0, make_vec({50, 50}), twm::make_constant(0.02)).valid);
}

TEST_CASE("value-preserving creation then redemption round-trips the pool")
{
    test::Gen gen(21);
    for (int i = 0; i < 200; ++i) {
        const auto n = gen.integer(2, 4);
        const auto pool = make_pool(gen.vec(n, 10, 100), gen.uniform(10, 1000));
        const PriceVector p(gen.vec(n, 0.5, 5));
        const Vec delta = gen.vec(n, 0, 20);
        const auto created = create_shares(pool, p, delta, twm::make_zero());
        const auto redeemed = redeem_shares(created.pool, p, created.minted, delta, twm::make_zero());
        REQUIRE(redeemed.valid);
        CHECK(redeemed.pool.shares == doctest::Approx(pool.shares).epsilon(1e-10));
        CHECK(redeemed.pool.reserves.isApprox(pool.reserves, 1e-10));
    }
}

TEST_CASE("delta bound is not applicable under a constant discount with a positive fee")
{
    const PriceVector p{1, 2};
    const Vec R = make_vec({100, 50});
    const auto rep = check_delta_bound(p, R, make_vec({10, 10}), 0.01, twm::make_constant(0.1), make_vec({0.5, 0.5}),
                                       make_vec({1, 0}));
    CHECK_FALSE(rep.applicable);
    CHECK_FALSE(rep.gradient_hypothesis);
    CHECK(rep.note.find("not applicable") != std::string::npos);
}

TEST_CASE("delta bound under a log discount whose price gradient clears the threshold")
{
    // F = b + a·log(pᵀR/V_ref) with a fixed reference value: ∇_pF = a·R/pᵀR
    // clears 8fR/pᵀR when a >= 8f, and F <= 1 near p.
    const PriceVector p{1, 1};
    const Vec R = make_vec({100, 100});
    const double f = 0.01;
    const double a = 16 * f;
    const double V_ref = 200.0;
    twm::DiscountFn F("log-value",
                      [a, V_ref](const PriceVector& q, const Vec&, const Vec& reserves, const Vec&) {
                          return 1.0 + a * std::log(q.values().dot(reserves) / V_ref);
                      });
    const auto rep = check_delta_bound(p, R, make_vec({10, 10}), f, F, make_vec({0.5, 0.5}), make_vec({0, 0}));
    CHECK(rep.gradient_hypothesis);
    CHECK(rep.discount_hypothesis);
    CHECK(rep.loans_hypothesis);
    CHECK(rep.applicable);
    // Oracle: V = pᵀR/(1+F) + f·pᵀℓ, ∂V/∂p_j = R_j/(1+F) - pᵀR·F_j/(1+F)² + f·ℓ_j.
    const double F0 = 1.0;
    for (int j = 0; j < 2; ++j) {
        const double grad = R[j] / (1 + F0) - 200.0 * (a * R[j] / 200.0) / ((1 + F0) * (1 + F0)) + f * 10.0;
        CHECK(rep.value_gradient[j] == doctest::Approx(grad).epsilon(1e-6));
    }
    CHECK(rep.holds);
}

TEST_CASE("pool state survives a JSON round trip")
{
    auto pool = make_pool(make_vec({10, 20, 30}), 42.0);
    pool.loans.push_back({7, make_vec({1, 2, 3})});
    const auto back = pool_from_json(to_json(pool));
    CHECK(back.reserves == pool.reserves);
    CHECK(back.shares == pool.shares);
    REQUIRE(back.loans.size() == 1);
    CHECK(back.loans[0].position_id == 7);
    CHECK(back.loans[0].amount == pool.loans[0].amount);
}
