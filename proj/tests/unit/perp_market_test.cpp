#include "pdlp/errors.hpp"
#include "pdlp/perp_market.hpp"

#include "gen.hpp"

#include "doctest.h"

#include <cmath>
#include <vector>

using namespace pdlp;
using namespace pdlp::perp;

namespace {

PerpMarket market(double L, double S, double p0, double kappa)
{
    PerpMarket m;
    m.long_oi = L;
    m.short_oi = S;
    m.mark_price = p0;
    m.kappa = kappa;
    return m;
}

TraderPosition position(double c, double size, double eta, double p0, std::uint64_t id = 1)
{
    TraderPosition pos;
    pos.collateral = c;
    pos.size = size;
    pos.leverage = eta;
    pos.entry_price = p0;
    pos.id = id;
    return pos;
}

std::vector<PriceVector> path(std::initializer_list<double> prices)
{
    std::vector<PriceVector> out;
    for (double p : prices) {
        out.push_back(PriceVector{1.0, p});
    }
    return out;
}

} // namespace

TEST_CASE("funding rate of a long-heavy book at the mark price is three kappa")
{
    CHECK(funding_rate(market(1000, 250, 2000, 0.01), 2000) == 0.03);
    const double kappa = 0.037;
    CHECK(funding_rate(market(1000, 250, 2000, kappa), 2000) == doctest::Approx(3 * kappa).epsilon(1e-15));
}

TEST_CASE("funding rate is zero for a balanced book at the mark price")
{
    CHECK(funding_rate(market(500, 500, 1234, 0.2), 1234) == 0.0);
}

TEST_CASE("funding rate turns negative when the oracle rises above the mark")
{
    CHECK(funding_rate(market(1000, 1000, 2000, 0.01), 2200) == doctest::Approx(-0.001).epsilon(1e-12));
}

TEST_CASE("funding rate rejects invalid markets")
{
    CHECK_THROWS_AS(funding_rate(market(-1, 1, 1, 0.1), 1), InvalidArgumentError);
    CHECK_THROWS_AS(funding_rate(market(1, 1, 1, 0.0), 1), InvalidArgumentError);
    CHECK_THROWS_AS(funding_rate(market(1, 1, 0.0, 0.1), 1), InvalidArgumentError);
}

TEST_CASE("collateral check follows notional against leverage times collateral")
{
    CHECK(check_collateral(position(2000, 4, 4, 2000)));
    CHECK_FALSE(check_collateral(position(0, 1, 4, 2000)));
    CHECK_FALSE(check_collateral(position(1999, 4, 4, 2000)));
    // Notional 8000 against 4·2000: exactly at the boundary.
    CHECK(check_collateral(position(2000, 4, -4, 2000)));
}

TEST_CASE("long liquidates at the threshold and survives just above it")
{
    const auto pos = position(2000, 4, 4, 2000);
    CHECK(is_liquidatable(pos, 1500));
    CHECK_FALSE(is_liquidatable(pos, 1500 + 1e-9));
    CHECK(liquidation_price(pos) == 1500);
    CHECK_FALSE(is_liquidatable(pos, 2000));
}

TEST_CASE("short liquidates at entry plus collateral over size")
{
    const auto pos = position(2000, 1, -4, 2000);
    CHECK_FALSE(is_liquidatable(pos, 2500));
    CHECK(is_liquidatable(pos, 4000));
    CHECK_FALSE(is_liquidatable(pos, 4000 - 1e-9));
    CHECK(liquidation_price(pos) == 4000);
}

TEST_CASE("liquidation rule agrees with a sign-expanded loss oracle")
{
    test::Gen gen(11);
    for (int i = 0; i < 2000; ++i) {
        const double c = gen.uniform(1, 1000);
        const double size = gen.uniform(0.1, 10);
        const double p0 = gen.uniform(10, 5000);
        const bool is_long = gen.coin();
        const auto pos = position(c, size, is_long ? 3.0 : -3.0, p0);
        const double p = p0 * gen.uniform(0.2, 2.0);
        const double loss = is_long ? size * (p0 - p) : size * (p - p0);
        CHECK(is_liquidatable(pos, p) == (loss >= c));
    }
}

TEST_CASE("minimum collateral meets the collateral check")
{
    test::Gen gen(3);
    for (int i = 0; i < 500; ++i) {
        const double size = gen.uniform(0.01, 100);
        const double eta = gen.uniform(1, 20) * (gen.coin() ? 1 : -1);
        const double p = gen.uniform(1, 5000);
        auto pos = position(minimum_collateral(size, eta, p), size, eta, p);
        CHECK(check_collateral(pos));
    }
}

TEST_CASE("funding step leaves a zero-rate market unchanged")
{
    const auto up = apply_funding(market(100, 100, 50, 0.1), 50);
    CHECK(up.rate == 0.0);
    CHECK(up.market.long_oi == 100);
    CHECK(up.market.short_oi == 100);
}

TEST_CASE("positive funding grows the long side by rate times short interest")
{
    const auto up = apply_funding(market(1000, 250, 2000, 0.01), 2000);
    CHECK(up.rate == 0.03);
    CHECK(up.market.long_oi == doctest::Approx(1007.5).epsilon(1e-14));
    CHECK(up.market.short_oi == 250);
}

TEST_CASE("negative funding shrinks the short side by rate times long interest")
{
    const auto up = apply_funding(market(100, 100, 100, 0.1), 110);
    CHECK(up.rate == doctest::Approx(-0.01).epsilon(1e-12));
    CHECK(up.market.short_oi == doctest::Approx(99).epsilon(1e-12));
    CHECK(up.market.long_oi == 100);
}

TEST_CASE("funding payouts split over the adjusted side in proportion to size")
{
    std::vector<TraderPosition> positions{position(1000, 600, 4, 2000, 1), position(1000, 400, 4, 2000, 2),
                                          position(1000, 250, -4, 2000, 3)};
    const auto up = apply_funding(market(1000, 250, 2000, 0.01), 2000, positions);
    double total = 0.0;
    for (const auto& pay : up.payouts) {
        CHECK(pay.position_id != 3);
        if (pay.position_id == 1) {
            CHECK(pay.size_change == doctest::Approx(0.6 * 7.5));
        }
        total += pay.size_change;
    }
    CHECK(total == doctest::Approx(7.5));
}

TEST_CASE("liquidation scan on an empty set is empty")
{
    const auto hist = path({2000, 1500});
    const auto res = liquidation_scan({}, hist);
    CHECK(res.surviving.empty());
    CHECK(res.liquidated.empty());
}

TEST_CASE("liquidation scan catches the first crossing only")
{
    auto pos = position(2000, 4, 4, 2000);
    pos.asset = 1;
    std::vector<TraderPosition> positions{pos};

    const auto crossed = path({2000, 1800, 1500});
    auto res = liquidation_scan(positions, crossed);
    CHECK(res.liquidated.size() == 1);
    CHECK(res.returned_collateral == 2000);

    const auto never = path({2000, 1600, 1700});
    res = liquidation_scan(positions, never);
    CHECK(res.surviving.size() == 1);
    CHECK(res.liquidated.empty());

    const auto earlier = path({2000, 1400, 1450});
    res = liquidation_scan(positions, earlier);
    CHECK(res.liquidated.empty());
    CHECK(res.stale.size() == 1);
}
