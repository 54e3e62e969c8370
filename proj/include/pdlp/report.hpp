#pragma once

#include "json.hpp"

#include <string>
#include <vector>

namespace pdlp::report {

struct FieldStats {
    double mean{0.0};
    double standard_error{0.0}; // sample stdev / √n, 0 for a single run
};

struct ScenarioAggregate {
    std::string scenario;
    std::vector<long long> seeds;
    std::vector<std::pair<std::string, FieldStats>> fields;
};

struct Report {
    std::vector<ScenarioAggregate> scenarios;
    std::vector<std::string> warnings;
    int valid_runs{0};
    std::string timeseries_csv; // scenario,seed,period,... one row per period

    nlohmann::json to_json() const;
    std::string table() const;
};

// Summary fields averaged across seeds.
const std::vector<std::string>& aggregated_fields();

// Reads every `<scenario>.<seed>.json` with its `.csv` twin in run_dir.
// Runs whose files do not parse are skipped with a warning. Throws
// ConfigError when run_dir is not a directory.
Report build_report(const std::string& run_dir);

// Writes report.json, report.txt and report_timeseries.csv into out_dir.
void write_report(const Report& report, const std::string& out_dir);

} // namespace pdlp::report
