#include "pdlp/errors.hpp"
#include "pdlp/report.hpp"
#include "pdlp/scenario.hpp"
#include "pdlp/simulator.hpp"

#include "doctest.h"

#include <filesystem>
#include <fstream>

using namespace pdlp;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / ("pdlp_unit_" + name))
    {
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

const char* kScenario = R"(
name: yaml_case
horizon: 5
seed: 3
fee_timing: end_of_step
assets: [USD, ETH]
prices:
  initial: [1, 2000]
  drift: [0, 0]
  volatility: [0, 0.01]
pool:
  reserves: [2000000, 1000]
  target_weights: [0.5, 0.5]
  fee: 0.0001
  shares: 1000000
  discount: {family: zero}
markets:
  - {asset: 1, kappa: 0.05, long_oi: 100, short_oi: 80, leverage: 3, swap_depth: 200000}
agents:
  swap_arbitrageur: {enabled: true}
)";

} // namespace

TEST_CASE("scenario YAML loads")
{
    TempDir dir("yaml");
    const auto file = dir.path() / "s.yaml";
    std::ofstream(file) << kScenario;
    const auto cfg = sim::load_scenario(file.string());
    CHECK(cfg.name == "yaml_case");
    CHECK(cfg.horizon == 5);
    CHECK(cfg.seed == 3);
    CHECK(cfg.fee_timing == sim::FeeTiming::EndOfStep);
    CHECK(cfg.pool.reserves[1] == 1000);
    REQUIRE(cfg.markets.size() == 1);
    CHECK(cfg.markets[0].short_oi == 80);
    CHECK(cfg.agents.swap_arbitrageur);
}

TEST_CASE("scenario errors name the problem")
{
    CHECK_THROWS_AS(sim::load_scenario("/nonexistent/pdlp.yaml"), ConfigError);
    TempDir dir("bad");
    const auto file = dir.path() / "s.yaml";
    std::string text = kScenario;
    text.replace(text.find("fee: 0.0001"), 11, "fee: 2.5");
    std::ofstream(file) << text;
    try {
        sim::load_scenario(file.string());
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("fee") != std::string::npos);
    }
    CHECK_THROWS_AS(sim::parse_fee_timing("sometimes"), ConfigError);
}

TEST_CASE("scenario names are restricted to file-safe characters")
{
    TempDir dir("name");
    const auto file = dir.path() / "s.yaml";
    std::string text = kScenario;
    text.replace(text.find("yaml_case"), 9, "../escape");
    std::ofstream(file) << text;
    CHECK_THROWS_AS(sim::load_scenario(file.string()), ConfigError);
}

TEST_CASE("report aggregates runs and skips malformed ones")
{
    TempDir dir("report");
    const auto file = dir.path() / "s.yaml";
    std::ofstream(file) << kScenario;
    auto cfg = sim::load_scenario(file.string());
    for (std::uint64_t seed : {1, 2, 3}) {
        cfg.seed = seed;
        sim::write_run(sim::run(cfg), dir.path().string());
    }
    std::ofstream(dir.path() / "broken.9.json") << "{";
    std::ofstream(dir.path() / "broken.9.csv") << "period\n";

    const auto rep = report::build_report(dir.path().string());
    CHECK(rep.valid_runs == 3);
    REQUIRE(rep.scenarios.size() == 1);
    CHECK(rep.scenarios[0].seeds.size() == 3);
    CHECK(rep.warnings.size() == 1);
    CHECK(rep.table().find("yaml_case") != std::string::npos);

    report::write_report(rep, dir.path().string());
    CHECK(fs::exists(dir.path() / "report.json"));
    CHECK(fs::exists(dir.path() / "report_timeseries.csv"));
    // Rebuilding ignores the report's own outputs.
    CHECK(report::build_report(dir.path().string()).valid_runs == 3);
}

TEST_CASE("report on a missing directory is a config error")
{
    CHECK_THROWS_AS(report::build_report("/nonexistent/pdlp_runs"), ConfigError);
}
