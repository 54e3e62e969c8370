#include "pdlp/hedging.hpp"

#include "pdlp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace pdlp::hedge {

namespace {

void require_dim(const Vec& v, Eigen::Index n, const char* what)
{
    if (v.size() != n) {
        throw InvalidArgumentError(std::string(what) + " has dimension " + std::to_string(v.size()) + ", expected " +
                                   std::to_string(n));
    }
}

nlohmann::json vec_json(const Vec& v)
{
    return std::vector<double>(v.data(), v.data() + v.size());
}

} // namespace

void HedgeProblem::validate() const
{
    const auto n = loans.size();
    require_dim(current_hedge, n, "current hedge");
    require_dim(rebalance_costs, n, "rebalance costs");
    require_dim(portfolio_delta, n, "portfolio delta");
    if (reserves.size() != 0) {
        require_dim(reserves, n, "reserves");
    }
    if (covariance.rows() != n || covariance.cols() != n) {
        throw InvalidArgumentError("covariance must be n x n");
    }
    if ((rebalance_costs.array() < 0.0).any()) {
        throw InvalidArgumentError("rebalance costs must be nonnegative");
    }
    if (!(risk_aversion > 0.0)) {
        throw InvalidArgumentError("risk aversion must be positive");
    }
    const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw LinearSolveError("covariance is not symmetric");
    }
    Eigen::LLT<Mat> llt(covariance);
    if (llt.info() != Eigen::Success) {
        throw LinearSolveError("covariance is not positive definite");
    }
}

double objective_value(const HedgeProblem& prob, const Vec& x)
{
    const Vec R = prob.reserves.size() == 0 ? Vec(Vec::Zero(x.size())) : prob.reserves;
    const Vec dx = x - prob.current_hedge;
    const Vec exposure = x + prob.portfolio_delta;
    return prob.fee * prob.loans.dot(x + R) - 0.5 * dx.dot(prob.rebalance_costs.cwiseProduct(dx)) -
           0.5 * prob.risk_aversion * exposure.dot(prob.covariance * exposure);
}

Vec objective_gradient(const HedgeProblem& prob, const Vec& x)
{
    return prob.fee * prob.loans - prob.rebalance_costs.cwiseProduct(x - prob.current_hedge) -
           prob.risk_aversion * (prob.covariance * (x + prob.portfolio_delta));
}

Vec delta_hedge(const HedgeProblem& prob)
{
    prob.validate();
    const Mat system = prob.risk_aversion * prob.covariance + Mat(prob.rebalance_costs.asDiagonal());
    const Vec rhs = prob.fee * prob.loans + prob.rebalance_costs.cwiseProduct(prob.current_hedge) -
                    prob.risk_aversion * (prob.covariance * prob.portfolio_delta);
    Eigen::LLT<Mat> llt(system);
    if (llt.info() != Eigen::Success) {
        throw LinearSolveError("hedge system is not positive definite");
    }
    Vec x = llt.solve(rhs);
    // One step of iterative refinement keeps the residual at rounding level
    // for badly scaled rebalance costs.
    x += llt.solve(rhs - system * x);
    const double scale = (prob.fee * prob.loans).norm() + prob.rebalance_costs.cwiseProduct(prob.current_hedge).norm() +
                         (prob.risk_aversion * (prob.covariance * prob.portfolio_delta)).norm() +
                         system.norm() * x.norm() + 1e-300;
    const double residual = objective_gradient(prob, x).norm();
    if (!std::isfinite(residual) || residual > 1e-8 * scale) {
        throw LinearSolveError("hedge solution fails the first-order condition (residual " + std::to_string(residual) +
                               ")");
    }
    return x;
}

Vec frictionless_hedge(const HedgeProblem& prob)
{
    prob.validate();
    Eigen::LLT<Mat> llt(prob.covariance);
    return (prob.fee / prob.risk_aversion) * llt.solve(prob.loans) - prob.portfolio_delta;
}

double max_eigenvalue(const Mat& sym)
{
    Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw EigenSolveError("eigen-decomposition failed");
    }
    return es.eigenvalues().maxCoeff();
}

double min_eigenvalue(const Mat& sym)
{
    Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw EigenSolveError("eigen-decomposition failed");
    }
    return es.eigenvalues().minCoeff();
}

GbmPriceModel::GbmPriceModel(const PriceVector& p, Vec drift, Vec volatility, Mat correlation)
{
    const auto n = p.size();
    require_dim(drift, n, "drift");
    require_dim(volatility, n, "volatility");
    if (correlation.rows() != n || correlation.cols() != n) {
        throw InvalidArgumentError("correlation must be n x n");
    }
    mean_ = p.values().array() * drift.array().exp();
    cov_.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            cov_(i, j) = mean_[i] * mean_[j] * std::expm1(correlation(i, j) * volatility[i] * volatility[j]);
        }
    }
}

EmpiricalPriceModel::EmpiricalPriceModel(const Mat& samples)
{
    if (samples.rows() < 2) {
        throw InvalidArgumentError("empirical price model needs at least two samples");
    }
    mean_ = samples.colwise().mean().transpose();
    const Mat centered = samples.rowwise() - mean_.transpose();
    cov_ = centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
}

nlohmann::json SharpeReport::to_json() const
{
    return {{"hedge", vec_json(hedge)},
            {"lambda_max", lambda_max},
            {"fee_revenue", fee_revenue},
            {"risk_charge", risk_charge},
            {"var_hedge", var_hedge},
            {"var_pool", var_pool},
            {"cov_hedge_pool", cov_hedge_pool},
            {"condition1", condition1},
            {"condition2_variance", variance_ok},
            {"condition2_covariance", covariance_ok},
            {"condition2", condition2},
            {"verdict", verdict}};
}

SharpeReport sharpe_conditions(const HedgeProblem& prob, const PriceModel& model)
{
    SharpeReport rep;
    rep.hedge = delta_hedge(prob);
    rep.lambda_max = max_eigenvalue(prob.covariance);
    const Vec mean = model.mean();
    const Mat cov = model.covariance();
    const Vec R = prob.reserves.size() == 0 ? prob.portfolio_delta : prob.reserves;
    rep.fee_revenue = prob.fee * mean.dot(prob.loans);
    rep.risk_charge = prob.risk_aversion * rep.lambda_max * mean.dot(prob.portfolio_delta);
    rep.var_hedge = rep.hedge.dot(cov * rep.hedge);
    rep.var_pool = R.dot(cov * R);
    rep.cov_hedge_pool = rep.hedge.dot(cov * R);
    rep.condition1 = rep.fee_revenue >= rep.risk_charge;
    rep.variance_ok = rep.var_hedge <= 4.0 * rep.var_pool;
    rep.covariance_ok = rep.cov_hedge_pool <= 0.0;
    rep.condition2 = rep.variance_ok && rep.covariance_ok;
    rep.verdict = rep.condition1 && rep.condition2;
    return rep;
}

namespace {

Mat block(const Mat& m, const std::vector<int>& rows, const std::vector<int>& cols)
{
    Mat out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(rows[i], cols[j]);
        }
    }
    return out;
}

Mat solve_pd(const Mat& lhs, const Mat& rhs, const char* what)
{
    Eigen::LLT<Mat> llt(lhs);
    if (llt.info() != Eigen::Success) {
        throw LinearSolveError(std::string(what) + " block is singular or not positive definite");
    }
    return llt.solve(rhs);
}

} // namespace

PoolPartition PoolPartition::split(Mat sigma, std::vector<int> first)
{
    PoolPartition part;
    const int n = static_cast<int>(sigma.rows());
    std::set<int> in_first(first.begin(), first.end());
    for (int i = 0; i < n; ++i) {
        if (!in_first.count(i)) {
            part.second.push_back(i);
        }
    }
    part.first = std::move(first);
    part.sigma = std::move(sigma);
    part.validate();
    return part;
}

Mat PoolPartition::A() const { return block(sigma, first, first); }
Mat PoolPartition::B() const { return block(sigma, first, second); }
Mat PoolPartition::C() const { return block(sigma, second, second); }

void PoolPartition::validate() const
{
    const int n = static_cast<int>(sigma.rows());
    if (sigma.cols() != n) {
        throw InvalidArgumentError("covariance must be square");
    }
    std::vector<int> seen(static_cast<std::size_t>(n), 0);
    for (int i : first) {
        if (i < 0 || i >= n) {
            throw InvalidArgumentError("partition index out of range");
        }
        ++seen[static_cast<std::size_t>(i)];
    }
    for (int i : second) {
        if (i < 0 || i >= n) {
            throw InvalidArgumentError("partition index out of range");
        }
        ++seen[static_cast<std::size_t>(i)];
    }
    if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; })) {
        throw InvalidArgumentError("partition must be a disjoint cover of the assets");
    }
    if (first.empty() || second.empty()) {
        throw InvalidArgumentError("both pools need at least one asset");
    }
}

SchurComplements schur_complements(const PoolPartition& part)
{
    part.validate();
    const Mat A = part.A();
    const Mat B = part.B();
    const Mat C = part.C();
    SchurComplements out;
    out.over_A = A - B * solve_pd(C, B.transpose(), "C");
    out.over_C = C - B.transpose() * solve_pd(A, B, "A");
    out.over_A = 0.5 * (out.over_A + out.over_A.transpose()).eval();
    out.over_C = 0.5 * (out.over_C + out.over_C.transpose()).eval();
    Eigen::LLT<Mat> full(part.sigma);
    if (full.info() == Eigen::Success) {
        if (Eigen::LLT<Mat>(out.over_A).info() != Eigen::Success ||
            Eigen::LLT<Mat>(out.over_C).info() != Eigen::Success) {
            throw LinearSolveError("Schur complement of a positive definite matrix lost definiteness");
        }
    }
    return out;
}

double sigma_min(const Mat& m)
{
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues().minCoeff();
}

double sigma_max(const Mat& m)
{
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues().maxCoeff();
}

nlohmann::json SinglePoolReport::to_json() const
{
    return {{"hypothesis_A", hypothesis_A},
            {"hypothesis_C", hypothesis_C},
            {"applicable", applicable},
            {"sigma_min_schur_A", sigma_min_schur_A},
            {"sigma_max_A", sigma_max_A},
            {"sigma_min_schur_C", sigma_min_schur_C},
            {"sigma_max_C", sigma_max_C},
            {"samples", samples},
            {"consequence_holds", consequence_holds},
            {"note", note}};
}

SinglePoolReport single_pool_better(const PoolPartition& part, int samples, std::uint64_t seed)
{
    const SchurComplements sc = schur_complements(part);
    const Mat A = part.A();
    const Mat C = part.C();
    SinglePoolReport rep;
    rep.sigma_min_schur_A = sigma_min(sc.over_A);
    rep.sigma_max_A = sigma_max(A);
    rep.sigma_min_schur_C = sigma_min(sc.over_C);
    rep.sigma_max_C = sigma_max(C);
    rep.hypothesis_A = rep.sigma_min_schur_A > rep.sigma_max_A;
    rep.hypothesis_C = rep.sigma_min_schur_C > rep.sigma_max_C;
    rep.applicable = rep.hypothesis_A && rep.hypothesis_C;
    const std::string symbols =
        "conditions compare Σ/A with A and Σ/C with C, not Σ_X, Σ_Y with σ_max(B)";
    if (!rep.applicable) {
        rep.note = "not applicable: " + std::string(rep.hypothesis_A ? "" : "σ_min(Σ/A) <= σ_max(A) ") +
                   std::string(rep.hypothesis_C ? "" : "σ_min(Σ/C) <= σ_max(C) ") + "(" + symbols + ")";
        return rep;
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto m = A.rows();
    rep.samples = samples;
    for (int s = 0; s < samples; ++s) {
        Vec p(m);
        Vec ell(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            p[i] = unit(rng);
            ell[i] = unit(rng);
        }
        if (p.dot(sc.over_A * ell) >= p.dot(A * ell)) {
            ++rep.consequence_holds;
        }
    }
    rep.note = "applicable (" + symbols + ")";
    return rep;
}

Mat load_covariance_csv(const std::string& path, std::vector<std::string>* names)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open covariance file '" + path + "'");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigError("covariance file '" + path + "' is empty");
    }
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            header.push_back(cell);
        }
    }
    const auto n = static_cast<Eigen::Index>(header.size());
    Mat m(n, n);
    Eigen::Index row = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        if (row >= n) {
            throw ConfigError("covariance file '" + path + "' has more rows than assets");
        }
        std::stringstream ss(line);
        std::string cell;
        Eigen::Index col = 0;
        while (std::getline(ss, cell, ',')) {
            if (col >= n) {
                throw ConfigError("covariance row " + std::to_string(row + 1) + " is too long");
            }
            try {
                std::size_t used = 0;
                m(row, col) = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw ConfigError("covariance entry '" + cell + "' is not a number");
            }
            ++col;
        }
        if (col != n) {
            throw ConfigError("covariance row " + std::to_string(row + 1) + " is too short");
        }
        ++row;
    }
    if (row != n) {
        throw ConfigError("covariance file '" + path + "' needs " + std::to_string(n) + " rows");
    }
    if (!m.isApprox(m.transpose(), 1e-9)) {
        throw ConfigError("covariance in '" + path + "' is not symmetric");
    }
    if (names != nullptr) {
        *names = std::move(header);
    }
    return m;
}

} // namespace pdlp::hedge
