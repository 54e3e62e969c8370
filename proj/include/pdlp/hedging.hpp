#pragma once

#include "pdlp/types.hpp"

#include "json.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace pdlp::hedge {

struct HedgeProblem {
    double fee{0.0};
    Vec loans;             // ℓ
    Vec current_hedge;     // π
    Vec rebalance_costs;   // c_r
    double risk_aversion{1.0};
    Mat covariance;        // Σ, per period
    Vec portfolio_delta;   // Δ
    Vec reserves;          // R, enters the objective only through the constant f·ℓᵀR

    Eigen::Index n_assets() const { return loans.size(); }
    // Dimensions, c_r >= 0, γ > 0, Σ symmetric positive definite.
    void validate() const;
};

// f·ℓᵀ(x + R) - ½(x - π)ᵀDiag(c_r)(x - π) - (γ/2)(x + Δ)ᵀΣ(x + Δ).
double objective_value(const HedgeProblem& prob, const Vec& x);
Vec objective_gradient(const HedgeProblem& prob, const Vec& x);

// (γΣ + Diag(c_r))⁻¹ [f·ℓ + Diag(c_r)·π - γΣΔ], with the first-order
// condition checked at the solution.
Vec delta_hedge(const HedgeProblem& prob);

// (f/γ)·Σ⁻¹ℓ - Δ.
Vec frictionless_hedge(const HedgeProblem& prob);

double max_eigenvalue(const Mat& sym);
double min_eigenvalue(const Mat& sym);

// One-period moments of the price vector.
class PriceModel {
public:
    virtual ~PriceModel() = default;
    virtual Vec mean() const = 0;
    virtual Mat covariance() const = 0;
};

// Lognormal moments after one period of GBM with log-drift μ - σ²/2:
// E[p_i] = p_i e^{μ_i}, Cov_ij = p_i p_j e^{μ_i + μ_j}(e^{ρ_ij σ_i σ_j} - 1).
class GbmPriceModel final : public PriceModel {
public:
    GbmPriceModel(const PriceVector& p, Vec drift, Vec volatility, Mat correlation);
    Vec mean() const override { return mean_; }
    Mat covariance() const override { return cov_; }

private:
    Vec mean_;
    Mat cov_;
};

// Sample moments of observed price vectors (rows are observations).
class EmpiricalPriceModel final : public PriceModel {
public:
    explicit EmpiricalPriceModel(const Mat& samples);
    Vec mean() const override { return mean_; }
    Mat covariance() const override { return cov_; }

private:
    Vec mean_;
    Mat cov_;
};

struct SharpeReport {
    Vec hedge;
    double lambda_max{0.0};
    double fee_revenue{0.0};   // f·E[pᵀℓ]
    double risk_charge{0.0};   // γ·λ_max·E[pᵀΔ]
    double var_hedge{0.0};     // Var[pᵀπ]
    double var_pool{0.0};      // Var[pᵀR]
    double cov_hedge_pool{0.0};// Cov(pᵀπ, pᵀR)
    bool condition1{false};
    bool variance_ok{false};
    bool covariance_ok{false};
    bool condition2{false};
    bool verdict{false};

    nlohmann::json to_json() const;
};

SharpeReport sharpe_conditions(const HedgeProblem& prob, const PriceModel& model);

struct PoolPartition {
    Mat sigma;
    std::vector<int> first;   // I₁
    std::vector<int> second;  // I₂

    static PoolPartition split(Mat sigma, std::vector<int> first);

    Mat A() const;
    Mat B() const;
    Mat C() const;
    // Disjoint cover of [n], A and C positive definite.
    void validate() const;
};

struct SchurComplements {
    Mat over_A; // A - B C⁻¹ Bᵀ
    Mat over_C; // C - Bᵀ A⁻¹ B
};

SchurComplements schur_complements(const PoolPartition& part);

double sigma_min(const Mat& m);
double sigma_max(const Mat& m);

struct SinglePoolReport {
    bool hypothesis_A{false}; // σ_min(Σ/A) > σ_max(A)
    bool hypothesis_C{false}; // σ_min(Σ/C) > σ_max(C)
    bool applicable{false};
    double sigma_min_schur_A{0.0};
    double sigma_max_A{0.0};
    double sigma_min_schur_C{0.0};
    double sigma_max_C{0.0};
    int samples{0};
    int consequence_holds{0}; // pᵀ(Σ/A)ℓ >= pᵀAℓ over sampled nonnegative p, ℓ
    std::string note;

    nlohmann::json to_json() const;
};

SinglePoolReport single_pool_better(const PoolPartition& part, int samples = 1000, std::uint64_t seed = 1);

// Row-major CSV with a header row of asset names.
Mat load_covariance_csv(const std::string& path, std::vector<std::string>* names = nullptr);

} // namespace pdlp::hedge
