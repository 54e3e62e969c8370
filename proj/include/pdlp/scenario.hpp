#pragma once

#include "pdlp/types.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pdlp::sim {

enum class FeeTiming { BeforeLpUpdates, EndOfStep };

FeeTiming parse_fee_timing(const std::string& s);
std::string to_string(FeeTiming t);

struct GbmSpec {
    Vec initial_prices;
    Vec drift;       // per period, log-drift is drift - vol²/2
    Vec volatility;  // per period
    Mat correlation;
};

struct PriceProcessSpec {
    enum class Kind { Gbm, Path };
    Kind kind{Kind::Gbm};
    GbmSpec gbm;
    std::vector<Vec> path; // explicit prices, path[0] is the initial price
};

struct PoolSpec {
    Vec reserves;
    Vec target_weights;
    double fee{0.001};
    double shares{1.0};
    nlohmann::json discount{{"family", "zero"}};
};

struct MarketSpec {
    int asset{1};
    double kappa{0.01};
    double long_oi{0.0};   // opened at t = 0 as one background position
    double short_oi{0.0};
    double leverage{1.0};  // leverage of the background positions
    double swap_depth{0.0};// numéraire depth R1 of the pool's swap quote; 0 disables
};

struct AgentSpec {
    bool funding_arbitrageur{false};
    double funding_leverage{5.0};

    bool swap_arbitrageur{false};

    bool twm_arbitrageur{false};
    bool twm_deposits_only{false};
    double twm_min_profit{0.0};
    double twm_trade_cap{0.1}; // per-asset trade size as a fraction of pool value
    int twm_max_iterations{300};

    bool hedged_lp{false};
    double risk_aversion{1e-3};
    Vec rebalance_costs;

    bool noise_traders{false};
    double noise_intensity{1.0};
    double noise_mean_size{1.0};
    double noise_leverage{3.0};
};

struct FeePolicy {
    bool dynamic{false};
    double theta{0.0};     // f = theta / L0
    double min_fee{1e-9};
    double max_fee{0.5};
};

struct ScenarioConfig {
    std::string name{"scenario"};
    int horizon{1};
    std::uint64_t seed{0};
    FeeTiming fee_timing{FeeTiming::BeforeLpUpdates};
    std::vector<std::string> asset_names;
    int numeraire{0};
    PriceProcessSpec prices;
    PoolSpec pool;
    std::vector<MarketSpec> markets;
    double price_bound{1.1};
    double lp_share_fraction{1.0};
    AgentSpec agents;
    FeePolicy fee_policy;

    Eigen::Index n_assets() const { return pool.reserves.size(); }
    Vec initial_prices() const;
    // Throws ConfigError describing the first violated constraint.
    void validate() const;
};

// YAML (or JSON, which YAML parses) scenario file.
ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json yaml_file_to_json(const std::string& path);

} // namespace pdlp::sim
