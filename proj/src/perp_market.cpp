#include "pdlp/perp_market.hpp"

#include "pdlp/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace pdlp::perp {

void PerpMarket::validate() const
{
    if (!(long_oi >= 0.0) || !(short_oi >= 0.0)) {
        throw InvalidArgumentError("open interest must be nonnegative");
    }
    if (!(mark_price > 0.0)) {
        throw InvalidArgumentError("mark price must be positive");
    }
    if (!(kappa > 0.0)) {
        throw InvalidArgumentError("kappa must be positive");
    }
}

double funding_rate(const PerpMarket& market, double p)
{
    if (market.short_oi == 0.0) {
        throw DegenerateMarketError("funding rate undefined with zero short open interest");
    }
    market.validate();
    if (!(p > 0.0)) {
        throw InvalidArgumentError("price must be positive");
    }
    return market.kappa * (market.long_oi / market.short_oi - p / market.mark_price);
}

bool check_collateral(const TraderPosition& pos)
{
    return pos.entry_price * pos.size <= std::abs(pos.leverage) * pos.collateral;
}

bool is_liquidatable(const TraderPosition& pos, double p)
{
    return pos.sign() * pos.size * (pos.entry_price - p) >= pos.collateral;
}

double liquidation_price(const TraderPosition& pos)
{
    return pos.entry_price - pos.sign() * pos.collateral / pos.size;
}

double minimum_collateral(double size, double leverage, double p)
{
    if (leverage == 0.0) {
        throw InvalidArgumentError("leverage must be nonzero");
    }
    double c = p * size / std::abs(leverage);
    while (std::abs(leverage) * c < p * size) {
        c = std::nextafter(c, std::numeric_limits<double>::infinity());
    }
    return c;
}

FundingUpdate apply_funding(const PerpMarket& market, double p_next,
                            std::span<const TraderPosition> positions)
{
    FundingUpdate out;
    out.rate = funding_rate(market, p_next);
    out.market = market;
    const double gamma = out.rate;
    double total = 0.0;
    Side receiving = Side::Long;
    if (gamma > 0.0) {
        total = gamma * market.short_oi;
        out.market.long_oi = market.long_oi + total;
        receiving = Side::Long;
    } else if (gamma < 0.0) {
        total = gamma * market.long_oi;
        out.market.short_oi = market.short_oi + total;
        receiving = Side::Short;
    } else {
        return out;
    }
    const double side_oi = receiving == Side::Long ? market.long_oi : market.short_oi;
    if (side_oi <= 0.0) {
        return out;
    }
    for (const auto& pos : positions) {
        if (pos.side() != receiving) {
            continue;
        }
        out.payouts.push_back({pos.id, total * pos.size / side_oi});
    }
    return out;
}

ScanResult liquidation_scan(std::span<const TraderPosition> positions,
                            std::span<const PriceVector> price_history)
{
    ScanResult out;
    if (positions.empty()) {
        return out;
    }
    if (price_history.empty()) {
        throw InvalidArgumentError("liquidation scan needs a nonempty price history");
    }
    const auto now = static_cast<std::int64_t>(price_history.size()) - 1;
    for (const auto& pos : positions) {
        if (pos.asset < 0 || pos.asset >= price_history.back().size()) {
            throw InvalidArgumentError("position " + std::to_string(pos.id) + " has asset index out of range");
        }
        const std::int64_t first = std::max<std::int64_t>(0, std::min(pos.opened_at, now));
        bool crossed_before = false;
        for (std::int64_t t = first; t < now; ++t) {
            if (is_liquidatable(pos, price_history[static_cast<std::size_t>(t)][pos.asset])) {
                crossed_before = true;
                break;
            }
        }
        if (crossed_before) {
            out.stale.push_back(pos);
        } else if (is_liquidatable(pos, price_history.back()[pos.asset])) {
            out.liquidated.push_back(pos);
            out.returned_collateral += pos.collateral;
        } else {
            out.surviving.push_back(pos);
        }
    }
    return out;
}

} // namespace pdlp::perp
