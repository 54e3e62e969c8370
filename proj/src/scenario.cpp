#include "pdlp/scenario.hpp"

#include "pdlp/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <set>

namespace pdlp::sim {

FeeTiming parse_fee_timing(const std::string& s)
{
    if (s == "before_lp_updates") {
        return FeeTiming::BeforeLpUpdates;
    }
    if (s == "end_of_step") {
        return FeeTiming::EndOfStep;
    }
    throw ConfigError("fee_timing must be before_lp_updates or end_of_step, got '" + s + "'");
}

std::string to_string(FeeTiming t)
{
    return t == FeeTiming::BeforeLpUpdates ? "before_lp_updates" : "end_of_step";
}

namespace {

nlohmann::json scalar_to_json(const YAML::Node& node)
{
    const std::string& s = node.Scalar();
    if (node.Tag() == "!") {
        return s;
    }
    if (s == "~" || s == "null" || s == "Null" || s == "NULL") {
        return nullptr;
    }
    if (s == "true" || s == "True" || s == "TRUE") {
        return true;
    }
    if (s == "false" || s == "False" || s == "FALSE") {
        return false;
    }
    if (!s.empty()) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(s, &used);
            if (used == s.size()) {
                return v;
            }
        } catch (const std::exception&) {
        }
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used == s.size()) {
                return v;
            }
        } catch (const std::exception&) {
        }
    }
    return s;
}

nlohmann::json node_to_json(const YAML::Node& node)
{
    switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
        return nullptr;
    case YAML::NodeType::Scalar:
        return scalar_to_json(node);
    case YAML::NodeType::Sequence: {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& child : node) {
            arr.push_back(node_to_json(child));
        }
        return arr;
    }
    case YAML::NodeType::Map: {
        nlohmann::json obj = nlohmann::json::object();
        for (const auto& kv : node) {
            obj[kv.first.as<std::string>()] = node_to_json(kv.second);
        }
        return obj;
    }
    }
    return nullptr;
}

void check_keys(const nlohmann::json& j, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!j.is_object()) {
        throw ConfigError(where + " must be a mapping");
    }
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!ok.count(it.key())) {
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
        }
    }
}

double num(const nlohmann::json& j, const char* key, double fallback, const std::string& where)
{
    if (!j.contains(key) || j.at(key).is_null()) {
        return fallback;
    }
    if (!j.at(key).is_number()) {
        throw ConfigError(where + "." + key + " must be a number");
    }
    return j.at(key).get<double>();
}

double req_num(const nlohmann::json& j, const char* key, const std::string& where)
{
    if (!j.contains(key)) {
        throw ConfigError(where + "." + key + " is required");
    }
    return num(j, key, 0.0, where);
}

bool flag(const nlohmann::json& j, const char* key, bool fallback, const std::string& where)
{
    if (!j.contains(key)) {
        return fallback;
    }
    if (!j.at(key).is_boolean()) {
        throw ConfigError(where + "." + key + " must be true or false");
    }
    return j.at(key).get<bool>();
}

Vec vec(const nlohmann::json& j, const std::string& where)
{
    if (!j.is_array()) {
        throw ConfigError(where + " must be a list of numbers");
    }
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) {
            throw ConfigError(where + " must be a list of numbers");
        }
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

Mat mat(const nlohmann::json& j, Eigen::Index n, const std::string& where)
{
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
        throw ConfigError(where + " must be a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
    }
    Mat m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec row = vec(j[static_cast<std::size_t>(i)], where);
        if (row.size() != n) {
            throw ConfigError(where + " must be a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
        }
        m.row(i) = row.transpose();
    }
    return m;
}

nlohmann::json section(const nlohmann::json& j, const char* key)
{
    if (!j.contains(key) || j.at(key).is_null()) {
        return nlohmann::json::object();
    }
    return j.at(key);
}

} // namespace

nlohmann::json yaml_file_to_json(const std::string& path)
{
    if (!std::filesystem::exists(path)) {
        throw ConfigError("config file '" + path + "' does not exist");
    }
    try {
        return node_to_json(YAML::LoadFile(path));
    } catch (const YAML::Exception& e) {
        throw ConfigError("cannot parse config '" + path + "': " + e.what());
    }
}

Vec ScenarioConfig::initial_prices() const
{
    return prices.kind == PriceProcessSpec::Kind::Gbm ? prices.gbm.initial_prices : prices.path.front();
}

ScenarioConfig scenario_from_json(const nlohmann::json& j)
{
    check_keys(j, "scenario",
               {"name", "horizon", "seed", "fee_timing", "numeraire", "assets", "prices", "pool", "markets",
                "price_bound", "lp_share_fraction", "agents", "fee_policy"});
    ScenarioConfig c;
    if (j.contains("name")) {
        if (!j.at("name").is_string()) {
            throw ConfigError("name must be a string");
        }
        c.name = j.at("name").get<std::string>();
    }
    c.horizon = static_cast<int>(num(j, "horizon", 1, "scenario"));
    c.seed = static_cast<std::uint64_t>(num(j, "seed", 0, "scenario"));
    if (j.contains("fee_timing")) {
        c.fee_timing = parse_fee_timing(j.at("fee_timing").get<std::string>());
    }
    c.numeraire = static_cast<int>(num(j, "numeraire", 0, "scenario"));
    if (j.contains("assets")) {
        for (const auto& a : j.at("assets")) {
            c.asset_names.push_back(a.is_string() ? a.get<std::string>() : a.dump());
        }
    }

    const auto pool = section(j, "pool");
    check_keys(pool, "pool", {"reserves", "target_weights", "fee", "shares", "discount"});
    if (!pool.contains("reserves")) {
        throw ConfigError("pool.reserves is required");
    }
    c.pool.reserves = vec(pool.at("reserves"), "pool.reserves");
    const auto n = c.pool.reserves.size();
    c.pool.target_weights = pool.contains("target_weights") ? vec(pool.at("target_weights"), "pool.target_weights")
                                                            : Vec(Vec::Constant(n, 1.0 / static_cast<double>(n)));
    c.pool.fee = num(pool, "fee", 0.001, "pool");
    c.pool.shares = num(pool, "shares", 1.0, "pool");
    if (pool.contains("discount")) {
        c.pool.discount = pool.at("discount");
    }

    const auto prices = section(j, "prices");
    check_keys(prices, "prices", {"process", "initial", "drift", "volatility", "correlation", "path"});
    const std::string process = prices.value("process", std::string("gbm"));
    if (process == "gbm") {
        c.prices.kind = PriceProcessSpec::Kind::Gbm;
        if (!prices.contains("initial")) {
            throw ConfigError("prices.initial is required");
        }
        c.prices.gbm.initial_prices = vec(prices.at("initial"), "prices.initial");
        c.prices.gbm.drift = prices.contains("drift") ? vec(prices.at("drift"), "prices.drift") : Vec(Vec::Zero(n));
        c.prices.gbm.volatility =
            prices.contains("volatility") ? vec(prices.at("volatility"), "prices.volatility") : Vec(Vec::Zero(n));
        c.prices.gbm.correlation = prices.contains("correlation") ? mat(prices.at("correlation"), n, "prices.correlation")
                                                                  : Mat(Mat::Identity(n, n));
    } else if (process == "path") {
        c.prices.kind = PriceProcessSpec::Kind::Path;
        if (!prices.contains("path") || !prices.at("path").is_array() || prices.at("path").empty()) {
            throw ConfigError("prices.path must be a nonempty list of price vectors");
        }
        for (const auto& row : prices.at("path")) {
            c.prices.path.push_back(vec(row, "prices.path"));
        }
    } else {
        throw ConfigError("prices.process must be gbm or path, got '" + process + "'");
    }

    if (j.contains("markets")) {
        if (!j.at("markets").is_array()) {
            throw ConfigError("markets must be a list");
        }
        for (const auto& m : j.at("markets")) {
            check_keys(m, "markets[]", {"asset", "kappa", "long_oi", "short_oi", "leverage", "swap_depth"});
            MarketSpec ms;
            ms.asset = static_cast<int>(req_num(m, "asset", "markets[]"));
            ms.kappa = num(m, "kappa", 0.01, "markets[]");
            ms.long_oi = num(m, "long_oi", 0.0, "markets[]");
            ms.short_oi = num(m, "short_oi", 0.0, "markets[]");
            ms.leverage = num(m, "leverage", 1.0, "markets[]");
            ms.swap_depth = num(m, "swap_depth", 0.0, "markets[]");
            c.markets.push_back(ms);
        }
    }
    c.price_bound = num(j, "price_bound", 1.1, "scenario");
    c.lp_share_fraction = num(j, "lp_share_fraction", 1.0, "scenario");

    const auto agents = section(j, "agents");
    check_keys(agents, "agents",
               {"funding_arbitrageur", "swap_arbitrageur", "twm_arbitrageur", "hedged_lp", "noise_traders"});
    {
        const auto a = section(agents, "funding_arbitrageur");
        check_keys(a, "agents.funding_arbitrageur", {"enabled", "leverage"});
        c.agents.funding_arbitrageur = flag(a, "enabled", false, "agents.funding_arbitrageur");
        c.agents.funding_leverage = num(a, "leverage", 5.0, "agents.funding_arbitrageur");
    }
    {
        const auto a = section(agents, "swap_arbitrageur");
        check_keys(a, "agents.swap_arbitrageur", {"enabled"});
        c.agents.swap_arbitrageur = flag(a, "enabled", false, "agents.swap_arbitrageur");
    }
    {
        const auto a = section(agents, "twm_arbitrageur");
        check_keys(a, "agents.twm_arbitrageur",
                   {"enabled", "deposits_only", "min_profit", "trade_cap", "max_iterations"});
        c.agents.twm_arbitrageur = flag(a, "enabled", false, "agents.twm_arbitrageur");
        c.agents.twm_deposits_only = flag(a, "deposits_only", false, "agents.twm_arbitrageur");
        c.agents.twm_min_profit = num(a, "min_profit", 0.0, "agents.twm_arbitrageur");
        c.agents.twm_trade_cap = num(a, "trade_cap", 0.1, "agents.twm_arbitrageur");
        c.agents.twm_max_iterations = static_cast<int>(num(a, "max_iterations", 300, "agents.twm_arbitrageur"));
    }
    {
        const auto a = section(agents, "hedged_lp");
        check_keys(a, "agents.hedged_lp", {"enabled", "risk_aversion", "rebalance_costs"});
        c.agents.hedged_lp = flag(a, "enabled", false, "agents.hedged_lp");
        c.agents.risk_aversion = num(a, "risk_aversion", 1e-3, "agents.hedged_lp");
        c.agents.rebalance_costs = a.contains("rebalance_costs") ? vec(a.at("rebalance_costs"), "agents.hedged_lp.rebalance_costs")
                                                                 : Vec(Vec::Zero(n));
    }
    {
        const auto a = section(agents, "noise_traders");
        check_keys(a, "agents.noise_traders", {"enabled", "intensity", "mean_size", "leverage"});
        c.agents.noise_traders = flag(a, "enabled", false, "agents.noise_traders");
        c.agents.noise_intensity = num(a, "intensity", 1.0, "agents.noise_traders");
        c.agents.noise_mean_size = num(a, "mean_size", 1.0, "agents.noise_traders");
        c.agents.noise_leverage = num(a, "leverage", 3.0, "agents.noise_traders");
    }

    const auto fp = section(j, "fee_policy");
    check_keys(fp, "fee_policy", {"mode", "theta", "min_fee", "max_fee"});
    const std::string mode = fp.value("mode", std::string("static"));
    if (mode != "static" && mode != "dynamic") {
        throw ConfigError("fee_policy.mode must be static or dynamic");
    }
    c.fee_policy.dynamic = mode == "dynamic";
    c.fee_policy.theta = num(fp, "theta", 0.0, "fee_policy");
    c.fee_policy.min_fee = num(fp, "min_fee", 1e-9, "fee_policy");
    c.fee_policy.max_fee = num(fp, "max_fee", 0.5, "fee_policy");

    c.validate();
    return c;
}

void ScenarioConfig::validate() const
{
    const auto n = n_assets();
    if (n < 1) {
        throw ConfigError("pool needs at least one asset");
    }
    if (horizon < 1) {
        throw ConfigError("horizon must be at least 1");
    }
    // The name becomes a file stem inside the output directory.
    const bool name_ok = !name.empty() && name.front() != '.' &&
                         std::all_of(name.begin(), name.end(), [](unsigned char ch) {
                             return std::isalnum(ch) || ch == '_' || ch == '-' || ch == '.';
                         });
    if (!name_ok) {
        throw ConfigError("name '" + name + "' must be nonempty, use only letters, digits, '_', '-', '.', and not start with '.'");
    }
    if (!asset_names.empty() && static_cast<Eigen::Index>(asset_names.size()) != n) {
        throw ConfigError("assets list length must match pool.reserves");
    }
    if ((pool.reserves.array() < 0.0).any()) {
        throw ConfigError("pool.reserves must be nonnegative");
    }
    if (pool.target_weights.size() != n || (pool.target_weights.array() < 0.0).any() ||
        std::abs(pool.target_weights.sum() - 1.0) > 1e-9) {
        throw ConfigError("pool.target_weights must be a point of the simplex with one weight per asset");
    }
    if (!(pool.fee > 0.0 && pool.fee < 1.0)) {
        throw ConfigError("pool.fee must lie in (0,1)");
    }
    if (!(pool.shares > 0.0)) {
        throw ConfigError("pool.shares must be positive");
    }
    if (numeraire < 0 || numeraire >= n) {
        throw ConfigError("numeraire must index a pool asset");
    }
    if (prices.kind == PriceProcessSpec::Kind::Gbm) {
        const auto& g = prices.gbm;
        if (g.initial_prices.size() != n || g.drift.size() != n || g.volatility.size() != n) {
            throw ConfigError("prices.initial, drift and volatility need one entry per asset");
        }
        if ((g.initial_prices.array() <= 0.0).any() || (g.volatility.array() < 0.0).any()) {
            throw ConfigError("initial prices must be positive and volatilities nonnegative");
        }
        if ((g.correlation - g.correlation.transpose()).cwiseAbs().maxCoeff() > 1e-12 ||
            (g.correlation.diagonal().array() - 1.0).abs().maxCoeff() > 1e-12) {
            throw ConfigError("prices.correlation must be symmetric with unit diagonal");
        }
        Eigen::SelfAdjointEigenSolver<Mat> es(g.correlation, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10) {
            throw ConfigError("prices.correlation is not positive semidefinite");
        }
    } else {
        if (static_cast<int>(prices.path.size()) < horizon + 1) {
            throw ConfigError("prices.path needs horizon + 1 price vectors");
        }
        for (const auto& row : prices.path) {
            if (row.size() != n || (row.array() <= 0.0).any()) {
                throw ConfigError("every prices.path entry needs n positive prices");
            }
        }
    }
    for (const auto& m : markets) {
        if (m.asset < 0 || m.asset >= n) {
            throw ConfigError("market asset index out of range");
        }
        if (!(m.kappa > 0.0) || m.long_oi < 0.0 || m.short_oi < 0.0 || !(m.leverage > 0.0) || m.swap_depth < 0.0) {
            throw ConfigError("market needs kappa > 0, nonnegative open interest and depth, leverage > 0");
        }
        if (m.swap_depth > 0.0 && m.asset == numeraire) {
            throw ConfigError("the numéraire asset cannot have a swap quote against itself");
        }
    }
    if (!(price_bound > 1.0)) {
        throw ConfigError("price_bound must exceed 1");
    }
    if (!(lp_share_fraction > 0.0 && lp_share_fraction <= 1.0)) {
        throw ConfigError("lp_share_fraction must lie in (0,1]");
    }
    if (agents.hedged_lp) {
        if (!(agents.risk_aversion > 0.0)) {
            throw ConfigError("agents.hedged_lp.risk_aversion must be positive");
        }
        if (agents.rebalance_costs.size() != n || (agents.rebalance_costs.array() < 0.0).any()) {
            throw ConfigError("agents.hedged_lp.rebalance_costs needs one nonnegative entry per asset");
        }
        if (prices.kind != PriceProcessSpec::Kind::Gbm) {
            throw ConfigError("the hedged LP needs a gbm price process for its covariance");
        }
    }
    if (agents.funding_arbitrageur && !(agents.funding_leverage > 0.0)) {
        throw ConfigError("agents.funding_arbitrageur.leverage must be positive");
    }
    if (agents.twm_arbitrageur && !(agents.twm_trade_cap > 0.0)) {
        throw ConfigError("agents.twm_arbitrageur.trade_cap must be positive");
    }
    if (agents.noise_traders && (!(agents.noise_intensity >= 0.0) || !(agents.noise_mean_size > 0.0) ||
                                 !(agents.noise_leverage > 0.0))) {
        throw ConfigError("noise trader parameters must be positive");
    }
    if (fee_policy.dynamic && !(fee_policy.theta > 0.0)) {
        throw ConfigError("dynamic fee policy needs theta > 0");
    }
    const bool swaps = agents.swap_arbitrageur;
    if (swaps && prices.kind == PriceProcessSpec::Kind::Gbm &&
        (prices.gbm.volatility[numeraire] != 0.0 || prices.gbm.drift[numeraire] != 0.0 ||
         prices.gbm.initial_prices[numeraire] != 1.0)) {
        throw ConfigError("swap arbitrage needs the numéraire asset at constant price 1");
    }
    if (swaps && prices.kind == PriceProcessSpec::Kind::Path) {
        for (const auto& row : prices.path) {
            if (row[numeraire] != 1.0) {
                throw ConfigError("swap arbitrage needs the numéraire asset at constant price 1");
            }
        }
    }
}

ScenarioConfig load_scenario(const std::string& path)
{
    return scenario_from_json(yaml_file_to_json(path));
}

} // namespace pdlp::sim
