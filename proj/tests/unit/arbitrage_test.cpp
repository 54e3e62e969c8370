#include "pdlp/arbitrage.hpp"
#include "pdlp/errors.hpp"
#include "pdlp/perp_market.hpp"
#include "pdlp/pool.hpp"

#include "gen.hpp"

#include "doctest.h"

#include <cmath>
#include <sstream>

using namespace pdlp;
using namespace pdlp::arb;

TEST_CASE("funding arbitrage size closes the long-short gap")
{
    CHECK(funding_arb_size(1000, 2000, 2000) == 0.0);
    CHECK(funding_arb_size(1000, 2200, 2000) == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("funding arbitrage size zeroes the funding rate")
{
    test::Gen gen(31);
    for (int i = 0; i < 1000; ++i) {
        const double L0 = gen.log_uniform(1, 1e6);
        const double p0 = gen.uniform(1, 5000);
        const double p = p0 * gen.uniform(1.0, 2.0);
        const double ell = funding_arb_size(L0, p, p0);
        perp::PerpMarket m;
        m.long_oi = L0 + ell;
        m.short_oi = L0;
        m.mark_price = p0;
        m.kappa = 1.0;
        CHECK(std::abs(perp::funding_rate(m, p)) <= 1e-12);
    }
}

TEST_CASE("funding arbitrage profit")
{
    CHECK(funding_arb_profit(0.0, 0.1, 0.05, 1000, 2200, 2000) == 0.0);
    const double ell = funding_arb_size(1000, 1.1, 1.0);
    CHECK(funding_arb_profit(ell, 0.0, 0.05, 1000, 1.1, 1.0) ==
          doctest::Approx(0.05 * 100 / 1000 * (1 - 1 / 1.1)).epsilon(1e-12));
    CHECK_THROWS_AS(funding_arb_profit(-1.0, 0.0, 0.05, 1000, 1.1, 1.0), InvalidArgumentError);
}

TEST_CASE("funding arbitrage is profitable exactly below the break-even fee")
{
    test::Gen gen(32);
    for (int i = 0; i < 1000; ++i) {
        const double L0 = gen.log_uniform(10, 1e5);
        const double kappa = gen.uniform(0.001, 0.2);
        const double ratio = gen.uniform(1.001, 1.5);
        const double breakeven = kappa / L0 * (1 - 1 / ratio);
        const double f = breakeven * gen.uniform(0.5, 1.5);
        const double ell = funding_arb_size(L0, ratio, 1.0);
        const double profit = funding_arb_profit(ell, f, kappa, L0, ratio, 1.0);
        if (std::abs(f - breakeven) > 1e-9 * breakeven) {
            CHECK((profit >= 0) == (f <= breakeven));
        }
    }
}

TEST_CASE("constant-product swap arbitrage closed form")
{
    const ConstantProductExchange G(2000, 1);
    const auto none = optimal_swap_arb(G, 2000);
    CHECK(none.x == 0.0);
    CHECK(none.profit == 0.0);
    CHECK(none.lp_loss == 0.0);

    const auto arb = optimal_swap_arb(G, 2420);
    CHECK(arb.closed_form);
    CHECK(arb.x == doctest::Approx(200).epsilon(1e-12));
    CHECK(arb.lp_loss == doctest::Approx(-20).epsilon(1e-10));
    CHECK(arb.profit == doctest::Approx(20).epsilon(1e-10));
}

TEST_CASE("closed form agrees with bisection on a generic quote")
{
    test::Gen gen(33);
    for (int i = 0; i < 300; ++i) {
        const double r1 = gen.log_uniform(1e2, 1e7);
        const double p0 = gen.uniform(0.5, 3000);
        const auto cp = ConstantProductExchange::at_price(r1, p0);
        const GenericExchange generic([&](double x) { return cp.value(x); }, [&](double x) { return cp.slope(x); });
        const double p = p0 * gen.uniform(1.0001, 1.5);
        const auto a = optimal_swap_arb(cp, p);
        const auto b = optimal_swap_arb_bisection(generic, p);
        CHECK(b.x == doctest::Approx(a.x).epsilon(1e-9));
        CHECK(b.lp_loss == doctest::Approx(a.lp_loss).epsilon(1e-7));
        // Closed-form LP loss: -(√R1 - √(p·R2))².
        const double expected = -std::pow(std::sqrt(r1) - std::sqrt(p * cp.r2()), 2);
        CHECK(a.lp_loss == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("reverse swap arbitrage mirrors a falling price")
{
    const ConstantProductExchange G(2000, 1);
    const auto arb = optimal_reverse_swap_arb(G, 2000.0 / 1.21);
    CHECK(arb.profit > 0);
    CHECK(arb.lp_loss == doctest::Approx(-std::pow(std::sqrt(2000.0) - std::sqrt(2000.0 / 1.21), 2)).epsilon(1e-9));
}

TEST_CASE("fee band endpoints")
{
    const double p0 = 2000;
    const auto G = ConstantProductExchange::at_price(2000, p0);
    const auto band = fee_band(0.05, 1000, 1.21, G, 1.21 * p0, p0);
    CHECK(band.f_upper == doctest::Approx(0.05 * (1 - 1 / 1.21) / 1000).epsilon(1e-12));
    REQUIRE(band.f_lower_bundled.has_value());
    CHECK(*band.f_lower_bundled == doctest::Approx(0.42).epsilon(1e-12));
    CHECK(band.f_lower_sufficient == doctest::Approx(band.x_star / 1000).epsilon(1e-14));
    CHECK(band.x_star == doctest::Approx(std::sqrt(1.21) * 2000 - 2000).epsilon(1e-10));

    const auto tiny = fee_band(0.05, 1000, 1.0 + 1e-9, G, (1.0 + 1e-9) * p0, p0);
    CHECK(tiny.f_upper < 1e-12);
    CHECK(tiny.f_lower < 1e-6);
    CHECK_THROWS_AS(fee_band(0.05, 1000, 1.05, G, 1.5 * p0, p0), OutOfBand);
}

TEST_CASE("LP single-period profit is zero exactly at the break-even fee")
{
    test::Gen gen(34);
    for (int i = 0; i < 300; ++i) {
        const double p0 = gen.uniform(1, 3000);
        const double L0 = gen.log_uniform(10, 1e4);
        const auto G = ConstantProductExchange::at_price(gen.log_uniform(1e3, 1e6), p0);
        const double B = gen.uniform(1.01, 1.5);
        const double p = p0 * gen.uniform(1.001, B);
        const auto band = fee_band(0.05, L0, B, G, p, p0);
        CHECK(lp_single_period_profit(band.f_lower, L0, G, p, p0) ==
              doctest::Approx(0.0).epsilon(1e-9 * std::abs(band.x_star) + 1e-9));
    }
}

TEST_CASE("box maximizer finds the vertex of a concave function")
{
    const auto f = [](const Vec& x) { return -(x - make_vec({3, -3})).squaredNorm(); };
    const auto res = maximize_on_box(f, make_vec({-1, -1}), make_vec({1, 1}), {}, SolverOptions{});
    CHECK(res.x.isApprox(make_vec({1, -1}), 1e-6));
}

TEST_CASE("creation arbitrage is idle without a positive discount")
{
    const PriceVector p{1, 1};
    const Vec R = make_vec({100, 100});
    const auto sol = solve_creation_arb(twm::make_zero(), p, make_vec({0.5, 0.5}), R, R);
    CHECK(sol.objective == 0.0);
    CHECK(sol.delta.norm() == 0.0);
}

TEST_CASE("creation arbitrage matches a dense grid search")
{
    const auto F = twm::make_linear_quadratic(make_vec({1, 0}), 1.0);
    const PriceVector p{1, 1};
    const Vec R = make_vec({100, 100});
    const auto sol = solve_creation_arb(F, p, make_vec({0.5, 0.5}), R, R);

    double grid_best = -1e300;
    for (int i = 0; i <= 4000; ++i) {
        for (int j = 0; j <= 4000; ++j) {
            const double a = -2 + 1e-3 * i;
            const double b = -2 + 1e-3 * j;
            grid_best = std::max(grid_best, (a - 0.5 * (a * a + b * b)) * (a + b));
        }
    }
    CHECK(sol.objective >= grid_best - 1e-6);
}

TEST_CASE("creation arbitrage on smoothed GMX deposits the underweight asset")
{
    const twm::GmxParams params{0.001, 0.02};
    const PriceVector p{1, 1};
    const Vec R = make_vec({300, 700});
    const Vec w = make_vec({0.5, 0.5});
    const auto F = twm::make_smoothed_gmx(params, twm::default_gmx_mu(params, p, R));
    SolverOptions opt;
    opt.deposits_only = true;
    const auto sol = solve_creation_arb(F, p, w, R, R, opt);
    REQUIRE(sol.objective > 0);
    CHECK(sol.delta[0] > sol.delta[1]);
    const Vec before = pool::weights(p, R) - w;
    const Vec after = pool::weights(p, R + sol.delta) - w;
    CHECK(after.lpNorm<1>() < before.lpNorm<1>());
}

TEST_CASE("redemption arbitrage is idle when the discount is never positive")
{
    const PriceVector p{1, 1};
    const Vec R = make_vec({100, 100});
    const auto sol = solve_redemption_arb(twm::make_constant(-0.1), p, make_vec({0.5, 0.5}), R, R, 100);
    CHECK(sol.lambda.norm() == 0.0);
    CHECK(sol.objective == 0.0);
}

TEST_CASE("one-asset redemption matches a golden-section oracle")
{
    // f(λ) = F(-λ) = aλ - (μ/2)λ² with F(δ) = -aδ - (μ/2)δ².
    const double a = 0.3;
    const double mu = 0.06;
    const auto F = twm::make_linear_quadratic(make_vec({-a}), mu);
    const PriceVector p{2.0};
    const Vec R = make_vec({12});
    const auto obj = [&](double l) {
        const double f = a * l - 0.5 * mu * l * l;
        return 2.0 * l * f / (1 + f);
    };
    double lo = 0.0;
    double hi = 12.0;
    const double phi = (std::sqrt(5.0) - 1) / 2;
    while (hi - lo > 1e-12) {
        const double x1 = hi - phi * (hi - lo);
        const double x2 = lo + phi * (hi - lo);
        (obj(x1) < obj(x2) ? lo : hi) = obj(x1) < obj(x2) ? x1 : x2;
    }
    const auto sol = solve_redemption_arb(F, p, Vec::Ones(1), R, R, 10);
    CHECK(sol.objective == doctest::Approx(obj(lo)).epsilon(1e-8));
    CHECK(sol.lambda[0] == doctest::Approx(lo).epsilon(1e-6));
}

TEST_CASE("solver trace is written as CSV")
{
    std::ostringstream os;
    write_trace_csv(os, {{0, 1.0, 0.5}, {1, 2.0, 0.25}});
    const std::string text = os.str();
    CHECK(text.find("iteration") != std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}
