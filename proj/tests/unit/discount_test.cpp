#include "pdlp/discount.hpp"
#include "pdlp/errors.hpp"
#include "pdlp/pool.hpp"

#include "gen.hpp"

#include "doctest.h"

#include <cmath>

using namespace pdlp;
using namespace pdlp::twm;

TEST_CASE("GMX discount of a zero trade is the base rate")
{
    const GmxParams params{0.01, 0.05};
    CHECK(gmx_discount(PriceVector{1, 1}, make_vec({0.5, 0.5}), make_vec({60, 40}), make_vec({0, 0}), params) == 0.01);
}

TEST_CASE("GMX discount of a trade landing on the target adds the tax share")
{
    // w^b = (0.6, 0.4), δ = (0, 20) lands on (0.5, 0.5): each G_i = γ_t·0.1/0.5.
    const GmxParams params{0.01, 0.05};
    const double F = gmx_discount(PriceVector{1, 1}, make_vec({0.5, 0.5}), make_vec({60, 40}), make_vec({0, 20}), params);
    CHECK(F == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("GMX discount clips at zero for trades pushing away from the target")
{
    const GmxParams params{0.001, 0.05};
    test::Gen gen(8);
    for (int i = 0; i < 200; ++i) {
        const double F = gmx_discount(PriceVector{1, 1}, make_vec({0.5, 0.5}), make_vec({60, 40}),
                                      make_vec({gen.uniform(50, 500), 0}), params);
        CHECK(F >= 0.0);
        CHECK(F < 0.001);
    }
}

TEST_CASE("recentered discount vanishes at zero")
{
    const auto F = recentered(make_gmx({0.01, 0.05}));
    CHECK(F.evaluate(PriceVector{1, 1}, make_vec({0.5, 0.5}), make_vec({60, 40}), make_vec({0, 0})) == 0.0);
}

TEST_CASE("target trade reaches the target weights")
{
    test::Gen gen(4);
    for (int i = 0; i < 300; ++i) {
        const auto n = gen.integer(2, 5);
        const PriceVector p(gen.vec(n, 0.5, 3));
        Vec w = gen.vec(n, 0.1, 1);
        w /= w.sum();
        const Vec R = gen.vec(n, 10, 100);
        const Vec d = target_trade(p, w, R);
        CHECK(pool::weights(p, R + d).isApprox(w, 1e-9));
    }
}

TEST_CASE("target quadratic is maximized exactly at the target trade")
{
    const auto F = make_target_quadratic(0.5);
    const PriceVector p{1, 2};
    const Vec w = make_vec({0.3, 0.7});
    const Vec R = make_vec({50, 10});
    const Vec d = target_trade(p, w, R);
    const double at = F.evaluate(p, w, R, d);
    test::Gen gen(9);
    for (int i = 0; i < 200; ++i) {
        CHECK(F.evaluate(p, w, R, d + gen.vec(2, -1, 1)) <= at);
    }
}

TEST_CASE("smoothing a concave quadratic keeps its maximizer")
{
    const double mu = 1.0;
    const Vec a = make_vec({0.4, -0.3});
    const auto raw = make_linear_quadratic(mu * a, mu);
    SmoothingOptions opt;
    opt.deposit_fraction = 0.01;
    opt.withdraw_fraction = 0.01;
    const PriceVector p{1, 1};
    const Vec R = make_vec({100, 100});
    const auto anchor = find_anchor(raw, p, make_vec({0.5, 0.5}), R, opt);
    CHECK((anchor.point - a).norm() < 1e-6);
}

TEST_CASE("smoothing the zero discount peaks at zero with value zero")
{
    const double mu = 1.0;
    const auto s = smooth_discount(make_zero(), mu);
    const PriceVector p{1, 1};
    const Vec w = make_vec({0.5, 0.5});
    const Vec R = make_vec({10, 10});
    CHECK(s.evaluate(p, w, R, Vec::Zero(2)) == 0.0);
    test::Gen gen(12);
    for (int i = 0; i < 50; ++i) {
        const Vec d = gen.vec(2, -5, 5);
        CHECK(s.evaluate(p, w, R, d) == doctest::Approx(-0.5 * mu * d.squaredNorm()).epsilon(1e-12));
    }
}

TEST_CASE("smoothed GMX is strongly concave on sampled pairs")
{
    const GmxParams params{0.001, 0.005};
    const PriceVector p{1, 2000};
    const Vec R = make_vec({2e6, 900});
    const Vec w = make_vec({0.5, 0.5});
    const double mu = default_gmx_mu(params, p, R);
    const auto F = make_smoothed_gmx(params, mu);
    test::Gen gen(2);
    const double scale = 1e4;
    for (int i = 0; i < 10000; ++i) {
        const Vec x = make_vec({gen.uniform(-scale, scale), gen.uniform(-scale, scale) / 2000});
        const Vec y = make_vec({gen.uniform(-scale, scale), gen.uniform(-scale, scale) / 2000});
        const double t = gen.uniform(0, 1);
        const double lhs = F.evaluate(p, w, R, t * x + (1 - t) * y);
        const double rhs = t * F.evaluate(p, w, R, x) + (1 - t) * F.evaluate(p, w, R, y) +
                           0.5 * mu * t * (1 - t) * (x - y).squaredNorm();
        CHECK(lhs >= rhs - 1e-12 * (1 + std::abs(rhs)));
    }
}

TEST_CASE("surrogate of an exact linear-quadratic discount is the discount")
{
    const auto F = make_linear_quadratic(make_vec({1, -1}), 2.0);
    const auto s = surrogate(F, PriceVector{1, 1}, make_vec({0.5, 0.5}), make_vec({10, 10}));
    CHECK(s.mu == 2.0);
    CHECK(s.delta_h.isApprox(make_vec({0.5, -0.5}), 1e-6));
}

TEST_CASE("surrogate of a shifted quadratic recovers the shift")
{
    const double mu = 3.0;
    const Vec a = make_vec({0.2, 0.7, -0.1});
    // -(μ/2)‖δ - a‖² + (μ/2)‖a‖² = μaᵀδ - (μ/2)‖δ‖².
    const DiscountFn F("shifted",
                       [mu, a](const PriceVector&, const Vec&, const Vec&, const Vec& d) {
                           return -0.5 * mu * (d - a).squaredNorm() + 0.5 * mu * a.squaredNorm();
                       },
                       mu);
    const auto s = surrogate(F, PriceVector{1, 1, 1}, make_vec({0.3, 0.3, 0.4}), make_vec({10, 10, 10}));
    CHECK(s.g.isApprox(mu * a, 1e-5));
    CHECK(s.delta_h.isApprox(a, 1e-5));
}

TEST_CASE("gap bounds scale as G over mu")
{
    const auto b = gap_bounds(1.0, 1.0);
    CHECK(b.fh == 2.0);
    CHECK(b.sh == 4.0);
    CHECK(gap_bounds(1e-12, 1.0).fh == doctest::Approx(0.0));
    CHECK_THROWS(gap_bounds(1.0, 0.0));
}

TEST_CASE("discount stanzas build the named families")
{
    const PriceVector p{1, 1};
    const Vec R = make_vec({10, 10});
    CHECK(discount_from_config({{"family", "zero"}}, p, R).name().find("zero") != std::string::npos);
    CHECK(discount_from_config({{"family", "gmx"}, {"base", 0.001}, {"tax", 0.01}}, p, R).valid());
    CHECK_THROWS_AS(discount_from_config({{"family", "nope"}}, p, R), ConfigError);
}
