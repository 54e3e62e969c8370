#pragma once

#include "pdlp/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace pdlp::perp {

// One perpetual contract on a single risky asset.
struct PerpMarket {
    double long_oi{0.0};
    double short_oi{0.0};
    double mark_price{1.0};
    double kappa{0.01};

    // Throws InvalidArgumentError unless L >= 0, S >= 0, p0 > 0, kappa > 0.
    void validate() const;
};

enum class Side { Long, Short };

struct TraderPosition {
    double collateral{0.0};
    double size{0.0};
    double leverage{1.0};   // signed; negative is short
    double entry_price{1.0};
    std::uint64_t id{0};
    int asset{0};
    std::int64_t opened_at{0};

    Side side() const { return leverage > 0.0 ? Side::Long : Side::Short; }
    double sign() const { return leverage > 0.0 ? 1.0 : -1.0; }
};

// kappa * (L/S - p/p0); positive means shorts pay longs.
double funding_rate(const PerpMarket& market, double p);

// p0 * size <= |leverage| * collateral.
bool check_collateral(const TraderPosition& pos);

// sign(leverage) * size * (p0 - p) >= collateral.
bool is_liquidatable(const TraderPosition& pos, double p);

// Price at which the position first becomes liquidatable: p0 - c/size for
// longs, p0 + c/size for shorts.
double liquidation_price(const TraderPosition& pos);

// Notional value to post as collateral for a fresh position at price p.
double minimum_collateral(double size, double leverage, double p);

struct FundingPayout {
    std::uint64_t position_id{0};
    double size_change{0.0};
};

struct FundingUpdate {
    PerpMarket market;
    double rate{0.0};
    std::vector<FundingPayout> payouts;
};

// Funding step: L += gamma*S when gamma >= 0, S += gamma*L when gamma <= 0.
// The change is split over the adjusted side in proportion to position size.
FundingUpdate apply_funding(const PerpMarket& market, double p_next,
                            std::span<const TraderPosition> positions = {});

struct ScanResult {
    std::vector<TraderPosition> surviving;
    std::vector<TraderPosition> liquidated;
    // Positions that crossed their threshold at an earlier price of the
    // history; they belong to a previous liquidation set.
    std::vector<TraderPosition> stale;
    double returned_collateral{0.0};
};

// price_history[t] is the oracle price vector of period t and the last entry
// is the current one. A position is liquidated when the current price is its
// first crossing since opened_at.
ScanResult liquidation_scan(std::span<const TraderPosition> positions,
                            std::span<const PriceVector> price_history);

} // namespace pdlp::perp
