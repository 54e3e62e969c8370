// pdlp_lab: run scenarios, verify the acceptance criteria, inspect fee bands
// and hedges, aggregate run directories.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include "pdlp/arbitrage.hpp"
#include "pdlp/errors.hpp"
#include "pdlp/hedging.hpp"
#include "pdlp/report.hpp"
#include "pdlp/scenario.hpp"
#include "pdlp/simulator.hpp"
#include "pdlp/verify.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<double> parse_list(const std::string& text, const std::string& flag)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(cell, &used));
            if (used != cell.size()) {
                throw std::invalid_argument(cell);
            }
        } catch (const std::exception&) {
            throw UsageError(flag + ": '" + cell + "' is not a number");
        }
    }
    if (out.empty()) {
        throw UsageError(flag + " needs at least one value");
    }
    return out;
}

pdlp::Vec to_vec(const std::vector<double>& v)
{
    return Eigen::Map<const pdlp::Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<std::uint64_t> parse_seeds(const std::string& text)
{
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (cell.empty() || !std::all_of(cell.begin(), cell.end(), ::isdigit)) {
            throw UsageError("--seed: '" + cell + "' is not a nonnegative integer");
        }
        out.push_back(std::stoull(cell));
    }
    if (out.empty()) {
        throw UsageError("--seed needs at least one value");
    }
    return out;
}

unsigned worker_count(std::size_t jobs)
{
    unsigned cap = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("PDLP_LAB_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) {
                cap = static_cast<unsigned>(v);
            }
        } catch (const std::exception&) {
            std::cerr << "warning: ignoring PDLP_LAB_THREADS='" << env << "'\n";
        }
    }
    return static_cast<unsigned>(std::min<std::size_t>(cap, std::max<std::size_t>(jobs, 1)));
}

int cmd_run(const std::string& config_path, const std::string& out_dir, const std::string& seeds_text,
            const std::string& fee_timing, bool verbose)
{
    pdlp::sim::ScenarioConfig base = pdlp::sim::load_scenario(config_path);
    if (!fee_timing.empty()) {
        base.fee_timing = pdlp::sim::parse_fee_timing(fee_timing);
    }
    const std::vector<std::uint64_t> seeds = seeds_text.empty() ? std::vector<std::uint64_t>{base.seed}
                                                                 : parse_seeds(seeds_text);
    base.validate();
    // Build the discount and initial positions once up front so configuration
    // problems surface as usage errors before any worker starts.
    pdlp::sim::Simulator probe(base);
    (void)probe;

    std::atomic<std::size_t> next{0};
    std::mutex io;
    int status = kOk;
    auto worker = [&] {
        for (std::size_t i = next++; i < seeds.size(); i = next++) {
            pdlp::sim::ScenarioConfig cfg = base;
            cfg.seed = seeds[i];
            try {
                const pdlp::sim::RunResult res = pdlp::sim::run(cfg);
                pdlp::sim::write_run(res, out_dir);
                std::lock_guard lock(io);
                std::cout << cfg.name << " seed " << cfg.seed << ": " << res.summary.periods << " periods, LP PnL "
                          << res.summary.lp_pnl << ", hedged LP PnL " << res.summary.hedged_lp_pnl
                          << ", max accounting residual " << res.summary.max_accounting_residual << '\n';
                if (verbose) {
                    std::cout << res.summary.to_json().dump(2) << '\n';
                }
            } catch (const std::exception& e) {
                std::lock_guard lock(io);
                std::cerr << "error: " << cfg.name << " seed " << cfg.seed << " halted: " << e.what() << '\n';
                status = kRuntime;
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned n = worker_count(seeds.size());
    for (unsigned t = 1; t < n; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }
    return status;
}

int cmd_verify(const std::string& suite, const std::string& out_dir, bool verbose)
{
    if (!suite.empty() && !pdlp::verify::is_suite(suite)) {
        std::string names;
        for (const auto& s : pdlp::verify::suite_names()) {
            names += " " + s;
        }
        throw UsageError("unknown suite '" + suite + "'; choose one of:" + names);
    }
    pdlp::verify::Options opts;
    opts.verbose = verbose;
    std::vector<pdlp::verify::CriterionResult> results;
    const std::vector<std::string> suites = suite.empty() ? pdlp::verify::suite_names() : std::vector{suite};
    for (const auto& s : suites) {
        for (int id : pdlp::verify::suite_criteria(s)) {
            results.push_back(pdlp::verify::run_criterion(id, opts));
            std::cout << pdlp::verify::format_line(results.back()) << std::endl;
        }
    }
    int passed = 0;
    for (const auto& r : results) {
        passed += r.passed;
    }
    std::cout << passed << "/" << results.size() << " criteria passed\n";
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        nlohmann::json j = nlohmann::json::array();
        for (const auto& r : results) {
            j.push_back(r.to_json());
        }
        std::ofstream(std::filesystem::path(out_dir) / "verify.json") << j.dump(2) << '\n';
    }
    bool all = passed == static_cast<int>(results.size());
    if (!all) {
        for (const auto& r : results) {
            if (!r.passed) {
                std::cerr << "failed: criterion " << r.id << " (" << r.name << ")\n";
            }
        }
    }
    return all ? kOk : kRuntime;
}

struct FeeBandArgs {
    double kappa{0.0};
    double open_interest{0.0};
    double price_bound{0.0};
    double depth{0.0};
    double p0{0.0};
    double price{0.0};
    double fee{-1.0};
};

int cmd_fee_band(const FeeBandArgs& a)
{
    const auto G = pdlp::arb::ConstantProductExchange::at_price(a.depth, a.p0);
    const pdlp::arb::FeeBand band = pdlp::arb::fee_band(a.kappa, a.open_interest, a.price_bound, G, a.price, a.p0);
    const pdlp::arb::SwapArb swap = pdlp::arb::optimal_swap_arb(G, a.price);
    nlohmann::json j = {{"f_upper", band.f_upper},
                        {"f_lower", band.f_lower},
                        {"f_lower_sufficient", band.f_lower_sufficient},
                        {"f_lower_bundled", band.f_lower_bundled ? nlohmann::json(*band.f_lower_bundled) : nullptr},
                        {"x_star", band.x_star},
                        {"lp_loss", swap.lp_loss},
                        {"arbitrage_size", pdlp::arb::funding_arb_size(a.open_interest, a.price, a.p0)},
                        {"nonempty", band.nonempty}};
    if (a.fee >= 0.0) {
        j["fee"] = a.fee;
        j["fee_in_band"] = band.contains(a.fee);
        j["lp_profit"] = pdlp::arb::lp_single_period_profit(a.fee, a.open_interest, G, a.price, a.p0);
        j["funding_arb_profit"] = pdlp::arb::funding_arb_profit(pdlp::arb::funding_arb_size(a.open_interest, a.price, a.p0),
                                                                a.fee, a.kappa, a.open_interest, a.price, a.p0);
    }
    std::cout << j.dump(2) << '\n';
    return kOk;
}

class FixedMoments final : public pdlp::hedge::PriceModel {
public:
    FixedMoments(pdlp::Vec mean, pdlp::Mat cov) : mean_(std::move(mean)), cov_(std::move(cov)) {}
    pdlp::Vec mean() const override { return mean_; }
    pdlp::Mat covariance() const override { return cov_; }

private:
    pdlp::Vec mean_;
    pdlp::Mat cov_;
};

struct HedgeArgs {
    std::string covariance;
    std::string loans;
    std::string delta;
    std::string prices;
    std::string current;
    std::string costs;
    std::string partition;
    double fee{0.0};
    double risk_aversion{1.0};
};

int cmd_hedge(const HedgeArgs& a)
{
    std::vector<std::string> names;
    const pdlp::Mat sigma = pdlp::hedge::load_covariance_csv(a.covariance, &names);
    const auto n = sigma.rows();
    auto sized = [&](const std::string& text, const std::string& flag, double fill) {
        if (text.empty()) {
            return pdlp::Vec(pdlp::Vec::Constant(n, fill));
        }
        const pdlp::Vec v = to_vec(parse_list(text, flag));
        if (v.size() != n) {
            throw UsageError(flag + " needs " + std::to_string(n) + " values to match the covariance");
        }
        return v;
    };
    pdlp::hedge::HedgeProblem prob;
    prob.fee = a.fee;
    prob.loans = sized(a.loans, "--loans", 0.0);
    prob.portfolio_delta = sized(a.delta, "--delta", 0.0);
    prob.reserves = prob.portfolio_delta;
    prob.current_hedge = sized(a.current, "--current", 0.0);
    prob.rebalance_costs = sized(a.costs, "--costs", 0.0);
    prob.risk_aversion = a.risk_aversion;
    prob.covariance = sigma;
    const FixedMoments model(sized(a.prices, "--prices", 1.0), sigma);
    const pdlp::hedge::SharpeReport rep = pdlp::hedge::sharpe_conditions(prob, model);
    nlohmann::json j = {{"assets", names}, {"sharpe", rep.to_json()}};
    if (!a.partition.empty()) {
        std::vector<int> first;
        for (double x : parse_list(a.partition, "--partition")) {
            first.push_back(static_cast<int>(x));
        }
        const auto part = pdlp::hedge::PoolPartition::split(sigma, first);
        j["single_pool"] = pdlp::hedge::single_pool_better(part).to_json();
    }
    std::cout << j.dump(2) << '\n';
    return kOk;
}

int cmd_report(const std::string& run_dir, const std::string& out_dir)
{
    const pdlp::report::Report rep = pdlp::report::build_report(run_dir);
    for (const auto& w : rep.warnings) {
        std::cerr << "warning: " << w << '\n';
    }
    if (rep.valid_runs == 0) {
        std::cerr << "error: no valid runs in '" << run_dir << "'\n";
        return kUsage;
    }
    pdlp::report::write_report(rep, out_dir.empty() ? run_dir : out_dir);
    std::cout << rep.table();
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Perpetual demand lending pool laboratory"};
    app.require_subcommand(1, 1);
    bool verbose = false;

    std::string config_path;
    std::string out_dir;
    std::string seeds;
    std::string fee_timing;
    auto* run = app.add_subcommand("run", "Run a scenario and write <name>.<seed>.csv/json");
    run->add_option("--config", config_path, "Scenario file (YAML or JSON)")->required();
    run->add_option("--out", out_dir, "Output directory")->default_val("out");
    run->add_option("--seed", seeds, "Seed or comma-separated seeds overriding the config");
    run->add_option("--fee-timing", fee_timing, "before_lp_updates or end_of_step")
        ->check(CLI::IsMember({"before_lp_updates", "end_of_step"}));
    run->add_flag("--verbose", verbose, "Print full summaries");

    std::string suite;
    std::string verify_out;
    auto* verify = app.add_subcommand("verify", "Run the acceptance criteria");
    verify->add_option("suite,--suite", suite, "Suite name (default: all)");
    verify->add_option("--out", verify_out, "Directory for verify.json");
    verify->add_flag("--verbose", verbose, "Verbose output");

    FeeBandArgs fb;
    auto* band = app.add_subcommand("fee-band", "Fee band for one price move on a constant-product quote");
    band->add_option("--kappa", fb.kappa, "Funding coefficient")->required()->check(CLI::PositiveNumber);
    band->add_option("--open-interest", fb.open_interest, "Long open interest L0")->required()->check(CLI::PositiveNumber);
    band->add_option("--price-bound", fb.price_bound, "Price bound B > 1")->required();
    band->add_option("--depth", fb.depth, "Numéraire depth R1 of the quote")->required()->check(CLI::PositiveNumber);
    band->add_option("--p0", fb.p0, "Mark price")->required()->check(CLI::PositiveNumber);
    band->add_option("--price", fb.price, "New oracle price")->required()->check(CLI::PositiveNumber);
    band->add_option("--fee", fb.fee, "Fee to test against the band");

    HedgeArgs ha;
    auto* hedge = app.add_subcommand("hedge", "Delta hedge and Sharpe-condition report");
    hedge->add_option("--covariance", ha.covariance, "Covariance CSV with a header of asset names")->required();
    hedge->add_option("--loans", ha.loans, "Loan vector, comma-separated");
    hedge->add_option("--delta", ha.delta, "Portfolio delta, comma-separated");
    hedge->add_option("--prices", ha.prices, "Expected prices, comma-separated (default 1)");
    hedge->add_option("--current", ha.current, "Current hedge, comma-separated");
    hedge->add_option("--costs", ha.costs, "Rebalance costs, comma-separated");
    hedge->add_option("--fee", ha.fee, "Lending fee")->required();
    hedge->add_option("--risk-aversion", ha.risk_aversion, "Risk aversion")->required();
    hedge->add_option("--partition", ha.partition, "Asset indices of the first pool for the Schur report");

    std::string run_dir;
    std::string report_out;
    auto* report = app.add_subcommand("report", "Aggregate a directory of run outputs");
    report->add_option("run_dir", run_dir, "Directory with <name>.<seed>.csv/json")->required();
    report->add_option("--out", report_out, "Output directory (default: run_dir)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (run->parsed()) {
            return cmd_run(config_path, out_dir, seeds, fee_timing, verbose);
        }
        if (verify->parsed()) {
            return cmd_verify(suite, verify_out, verbose);
        }
        if (band->parsed()) {
            return cmd_fee_band(fb);
        }
        if (hedge->parsed()) {
            return cmd_hedge(ha);
        }
        if (report->parsed()) {
            return cmd_report(run_dir, report_out);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const pdlp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kUsage;
    } catch (const pdlp::InvalidArgumentError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kUsage;
}
