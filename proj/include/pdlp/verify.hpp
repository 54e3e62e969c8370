#pragma once

#include "pdlp/scenario.hpp"

#include "json.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace pdlp::verify {

struct CriterionResult {
    int id{0};
    std::string name;
    std::string suite;
    bool passed{false};
    double measured{0.0};
    double expected{0.0};
    double tolerance{0.0};
    double seconds{0.0};
    std::string note;

    nlohmann::json to_json() const;
};

struct Options {
    bool verbose{false};
};

// funding, fee-band, surrogate, delta-bound, hedge, schur, simulator.
const std::vector<std::string>& suite_names();
bool is_suite(const std::string& name);
std::vector<int> suite_criteria(const std::string& suite);

CriterionResult run_criterion(int id, const Options& options = {});
std::vector<CriterionResult> run_suite(const std::string& suite, const Options& options = {});
std::vector<CriterionResult> run_all(const Options& options = {});

// "criterion <id> [<suite>] <name>: PASS|FAIL measured=... expected=... tol=... (<s>s) <note>"
std::string format_line(const CriterionResult& r);
void print_table(std::ostream& os, const std::vector<CriterionResult>& results);

// Member `index` of the simulator smoke suite; varied assets, agents and
// fee policies, all small enough to run in well under a second.
sim::ScenarioConfig smoke_scenario(int index);

struct HedgeStudy {
    int seeds{0};
    int periods{0};
    int condition_failures{0};
    double hedged_sharpe{0.0};
    double unhedged_sharpe{0.0};
    double standard_error{0.0};
};

struct HedgeStudySetup {
    Vec reserves;
    Vec loans;
    double fee{1e-4};
    double volatility{0.002};
    double correlation{0.2};
    int seeds{200};
    int periods{250};
};

// Hedged versus unhedged per-period Sharpe over correlated zero-drift GBM.
// Risk aversion is recalibrated each period to the middle of the window in
// which both Sharpe conditions hold.
HedgeStudy hedge_study(const HedgeStudySetup& setup);

} // namespace pdlp::verify
