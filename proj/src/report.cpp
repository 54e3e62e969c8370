#include "pdlp/report.hpp"

#include "pdlp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace pdlp::report {

namespace fs = std::filesystem;

namespace {

struct Run {
    std::string scenario;
    long long seed{0};
    nlohmann::json summary;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

// Throws std::runtime_error describing the first problem.
void read_metrics_csv(const fs::path& path, Run& run)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("empty file");
    }
    run.header = split_csv_line(line);
    for (const char* col : {"period", "pool_value", "lp_value", "hedged_lp_value"}) {
        if (std::find(run.header.begin(), run.header.end(), col) == run.header.end()) {
            throw std::runtime_error(std::string("missing column '") + col + "'");
        }
    }
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto cells = split_csv_line(line);
        if (cells.size() != run.header.size()) {
            throw std::runtime_error("line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                     " cells, header has " + std::to_string(run.header.size()));
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            std::size_t used = 0;
            const double v = std::stod(c, &used);
            if (used != c.size()) {
                throw std::runtime_error("line " + std::to_string(line_no) + ": '" + c + "' is not a number");
            }
            row.push_back(v);
        }
        run.rows.push_back(std::move(row));
    }
}

std::size_t column(const Run& run, const std::string& name)
{
    const auto it = std::find(run.header.begin(), run.header.end(), name);
    return it == run.header.end() ? run.header.size() : static_cast<std::size_t>(it - run.header.begin());
}

FieldStats stats(const std::vector<double>& xs)
{
    FieldStats s;
    if (xs.empty()) {
        return s;
    }
    for (double x : xs) {
        s.mean += x;
    }
    s.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) {
            ss += (x - s.mean) * (x - s.mean);
        }
        s.standard_error = std::sqrt(ss / static_cast<double>(xs.size() - 1)) / std::sqrt(static_cast<double>(xs.size()));
    }
    return s;
}

} // namespace

const std::vector<std::string>& aggregated_fields()
{
    static const std::vector<std::string> f{"lp_sharpe",
                                            "hedged_lp_sharpe",
                                            "lp_pnl",
                                            "hedged_lp_pnl",
                                            "total_fee_revenue",
                                            "total_rebalancing_loss",
                                            "total_twm_dilution",
                                            "total_liquidation_shortfall",
                                            "funding_arb_pnl",
                                            "fee_band_occupancy"};
    return f;
}

Report build_report(const std::string& run_dir)
{
    if (!fs::is_directory(run_dir)) {
        throw ConfigError("run directory '" + run_dir + "' does not exist");
    }
    std::vector<fs::path> summaries;
    for (const auto& entry : fs::directory_iterator(run_dir)) {
        const auto& path = entry.path();
        if (entry.is_regular_file() && path.extension() == ".json" && path.stem().string().rfind("report", 0) != 0) {
            summaries.push_back(path);
        }
    }
    std::sort(summaries.begin(), summaries.end());

    Report rep;
    std::vector<Run> runs;
    for (const auto& path : summaries) {
        Run run;
        try {
            std::ifstream in(path);
            run.summary = nlohmann::json::parse(in);
            run.scenario = run.summary.at("scenario").get<std::string>();
            run.seed = run.summary.at("seed").get<long long>();
            for (const auto& f : aggregated_fields()) {
                if (!run.summary.at(f).is_number()) {
                    throw std::runtime_error("field '" + f + "' is not a number");
                }
            }
        } catch (const std::exception& e) {
            rep.warnings.push_back("skipping " + path.filename().string() + ": " + e.what());
            continue;
        }
        fs::path csv = path;
        csv.replace_extension(".csv");
        try {
            read_metrics_csv(csv, run);
        } catch (const std::exception& e) {
            rep.warnings.push_back("skipping " + csv.filename().string() + ": " + e.what());
            continue;
        }
        runs.push_back(std::move(run));
    }
    rep.valid_runs = static_cast<int>(runs.size());

    std::map<std::string, std::vector<const Run*>> by_scenario;
    for (const auto& r : runs) {
        by_scenario[r.scenario].push_back(&r);
    }
    for (const auto& [name, group] : by_scenario) {
        ScenarioAggregate agg;
        agg.scenario = name;
        for (const Run* r : group) {
            agg.seeds.push_back(r->seed);
        }
        for (const auto& f : aggregated_fields()) {
            std::vector<double> xs;
            for (const Run* r : group) {
                xs.push_back(r->summary.at(f).get<double>());
            }
            agg.fields.emplace_back(f, stats(xs));
        }
        rep.scenarios.push_back(std::move(agg));
    }

    std::ostringstream ts;
    ts.precision(17);
    ts << "scenario,seed,period,pool_value,lp_value,hedged_lp_value,cumulative_fees,cumulative_rebalancing_loss\n";
    for (const auto& r : runs) {
        const auto period = column(r, "period");
        const auto pool = column(r, "pool_value");
        const auto lp = column(r, "lp_value");
        const auto hedged = column(r, "hedged_lp_value");
        const auto fees = column(r, "fees_accrued");
        const auto rebal = column(r, "rebalancing_loss");
        double cum_fees = 0.0;
        double cum_rebal = 0.0;
        for (const auto& row : r.rows) {
            cum_fees += fees < row.size() ? row[fees] : 0.0;
            cum_rebal += rebal < row.size() ? row[rebal] : 0.0;
            ts << r.scenario << ',' << r.seed << ',' << static_cast<long long>(row[period]) << ',' << row[pool] << ','
               << row[lp] << ',' << row[hedged] << ',' << cum_fees << ',' << cum_rebal << '\n';
        }
    }
    rep.timeseries_csv = ts.str();
    return rep;
}

nlohmann::json Report::to_json() const
{
    nlohmann::json out = {{"valid_runs", valid_runs}, {"warnings", warnings}, {"scenarios", nlohmann::json::array()}};
    for (const auto& s : scenarios) {
        nlohmann::json fields = nlohmann::json::object();
        for (const auto& [name, st] : s.fields) {
            fields[name] = {{"mean", st.mean}, {"standard_error", st.standard_error}};
        }
        out["scenarios"].push_back({{"scenario", s.scenario}, {"runs", s.seeds.size()}, {"seeds", s.seeds},
                                    {"fields", fields}});
    }
    return out;
}

std::string Report::table() const
{
    std::ostringstream os;
    os << std::left << std::setw(24) << "scenario" << std::setw(6) << "runs";
    const std::vector<std::string> cols{"lp_sharpe", "hedged_lp_sharpe", "lp_pnl", "hedged_lp_pnl",
                                        "total_fee_revenue", "total_rebalancing_loss", "total_twm_dilution"};
    for (const auto& c : cols) {
        os << std::setw(30) << c;
    }
    os << '\n';
    for (const auto& s : scenarios) {
        os << std::setw(24) << s.scenario << std::setw(6) << s.seeds.size();
        for (const auto& c : cols) {
            for (const auto& [name, st] : s.fields) {
                if (name == c) {
                    std::ostringstream cell;
                    cell << std::setprecision(6) << st.mean << " ± " << std::setprecision(3) << st.standard_error;
                    os << std::setw(30) << cell.str();
                }
            }
        }
        os << '\n';
    }
    return os.str();
}

void write_report(const Report& report, const std::string& out_dir)
{
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    auto write = [&](const char* name, const std::string& text) {
        std::ofstream os(dir / name, std::ios::binary);
        if (!os) {
            throw Error("cannot write '" + (dir / name).string() + "'");
        }
        os << text;
    };
    write("report.json", report.to_json().dump(2) + "\n");
    write("report.txt", report.table());
    write("report_timeseries.csv", report.timeseries_csv);
}

} // namespace pdlp::report
