#pragma once

#include "pdlp/discount.hpp"
#include "pdlp/perp_market.hpp"
#include "pdlp/pool.hpp"
#include "pdlp/scenario.hpp"
#include "pdlp/types.hpp"

#include "json.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace pdlp::sim {

// Correlated lognormal paths; element 0 is the initial price and element t
// the price after t periods.
std::vector<PriceVector> gbm_paths(const GbmSpec& spec, int T, std::uint64_t seed);

enum class Owner { Background, FundingArbitrageur, Noise };

struct PeriodMetrics {
    int period{0};
    Vec prices;
    Vec funding_rate;          // rate paid in step 3, per market (0 when skipped)
    Vec post_funding_rate;     // rate of the book after step 6 against this period's move
    Vec long_oi;
    Vec short_oi;
    double fee{0.0};
    double fees_accrued{0.0};      // value of f·Σc_i, >= 0
    double rebalancing_loss{0.0};  // swap-arbitrage change in pool value, <= 0
    double twm_dilution{0.0};      // value transferred to TWM arbitrageurs, >= 0
    int twm_action{0};             // 0 none, 1 creation, 2 redemption
    double liquidation_shortfall{0.0};
    int liquidations{0};
    double revaluation{0.0};
    double pool_value{0.0};
    double share_value{0.0};
    double lp_value{0.0};
    double hedged_lp_value{0.0};
    double funding_arb_pnl{0.0};
    double lp_profit{0.0};         // fees + rebalancing loss
    int fee_band_state{-1};        // -1 move outside (1, B], 0 outside band, 1 inside
    int sharpe_condition1{-1};    // -1 when no hedged LP
    int sharpe_condition2{-1};
    double accounting_residual{0.0};
};

struct SimState {
    int period{0};
    std::vector<PriceVector> history;
    pool::PoolState pool;
    std::vector<perp::PerpMarket> markets;
    std::vector<perp::TraderPosition> positions;
    std::map<std::uint64_t, Owner> owners;
    std::map<int, std::uint64_t> arb_position; // market index -> open arbitrage position
    std::uint64_t next_id{1};
    double lp_shares{0.0};
    Vec hedge;
    double hedge_pnl{0.0};
    double hedge_costs{0.0};
    double initial_lp_value{0.0};
    std::mt19937_64 rng;
};

class Simulator {
public:
    explicit Simulator(ScenarioConfig config);

    const ScenarioConfig& config() const { return config_; }
    const SimState& state() const { return state_; }

    // One period ending at p_next, in the fixed six-step order.
    PeriodMetrics step(const PriceVector& p_next);

private:
    void liquidate(const PriceVector& p, PeriodMetrics& m);
    void pay_funding(const PriceVector& p, PeriodMetrics& m);
    void accrue_fees(const PriceVector& p, PeriodMetrics& m);
    void swap_arbitrage(const PriceVector& p, PeriodMetrics& m);
    double twm_arbitrage(const PriceVector& p, PeriodMetrics& m);
    void hedge_rebalance(const PriceVector& p, PeriodMetrics& m);
    void trade(const PriceVector& p, PeriodMetrics& m);
    void report_fee_band(const PriceVector& p, const Vec& long_oi_start, PeriodMetrics& m);

    bool open_position(const PriceVector& p, int market, double size, double leverage, Owner owner);
    void close_position(std::uint64_t id);
    void refresh_open_interest();
    Vec loan_for(const perp::TraderPosition& pos) const;

    ScenarioConfig config_;
    SimState state_;
    twm::DiscountFn discount_;
};

struct RunSummary {
    std::string scenario;
    std::uint64_t seed{0};
    std::string fee_timing;
    int periods{0};
    double total_fee_revenue{0.0};
    double total_rebalancing_loss{0.0};
    double total_twm_dilution{0.0};
    double total_liquidation_shortfall{0.0};
    int total_liquidations{0};
    double funding_arb_pnl{0.0};
    double lp_pnl{0.0};
    double hedged_lp_pnl{0.0};
    double lp_sharpe{0.0};
    double hedged_lp_sharpe{0.0};
    double fee_band_occupancy{0.0};
    int fee_band_periods{0};
    int sharpe_conditions_held{0};       // periods with both conditions holding
    int sharpe_conditions_checked{0};
    double max_accounting_residual{0.0};
    nlohmann::json final_pool;

    nlohmann::json to_json() const;
};

struct RunResult {
    std::vector<PeriodMetrics> periods;
    RunSummary summary;
};

RunResult run(const ScenarioConfig& config);

// mean / stdev of successive differences of a value series (0 when flat).
double sharpe_of_changes(const std::vector<double>& values);

void write_metrics_csv(std::ostream& os, const std::vector<PeriodMetrics>& periods);

// Writes <name>.<seed>.csv and <name>.<seed>.json into out_dir.
void write_run(const RunResult& result, const std::string& out_dir);

} // namespace pdlp::sim
