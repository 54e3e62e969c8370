#pragma once

#include "pdlp/discount.hpp"
#include "pdlp/types.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pdlp::pool {

struct Loan {
    std::uint64_t position_id{0};
    Vec amount;
};

struct PoolState {
    Vec reserves;
    std::vector<Loan> loans;
    double shares{1.0};
    Vec target_weights;
    double fee{0.001};

    Eigen::Index n_assets() const { return reserves.size(); }
    Vec total_loans() const;
    // Dimensions, simplex target, shares > 0, fee in (0,1), loans within reserves.
    void validate() const;
};

// (p ⊙ R) / pᵀR.
Vec weights(const PriceVector& p, const Vec& R);

// R - Σ c_i; throws InsolvencyError if any component is negative.
Vec available(const PoolState& pool);

double portfolio_value(const PriceVector& p, const Vec& R);

// pᵀR / (1 + F) + f·pᵀℓ.
double diluted_value(const PriceVector& p, const Vec& R, const Vec& loans, double fee, double discount);

struct CreationResult {
    PoolState pool;
    double discount{0.0};
    double fraction{0.0};        // share of the post-trade pool owned by the depositor
    double minted{0.0};          // new shares; negative when the update withdraws value
    double value_received{0.0};  // (1 + F)·pᵀΔ
};

// Applies a portfolio update Δ >= -R^A and mints the discounted pro-rata claim.
CreationResult create_shares(const PoolState& pool, const PriceVector& p, const Vec& delta,
                             const twm::DiscountFn& F);

struct RedemptionResult {
    bool valid{false};
    PoolState pool;              // updated only when valid
    double discount{0.0};
    double required_value{0.0};  // (1 + F(-λ))·(σ/S)·pᵀR
    double basket_value{0.0};    // pᵀλ
};

// Validates a caller-proposed basket λ for σ shares (relative tolerance 1e-9).
RedemptionResult redeem_shares(const PoolState& pool, const PriceVector& p, double sigma, const Vec& lambda,
                               const twm::DiscountFn& F);

inline constexpr double kValueTolerance = 1e-9;

bool values_match(double a, double b, double rel_tol = kValueTolerance);

struct DeltaBoundReport {
    bool applicable{false};
    bool gradient_hypothesis{false};   // ∇_pF >= 8fR / pᵀR componentwise
    bool discount_hypothesis{false};   // F <= 1
    bool loans_hypothesis{false};      // ℓ <= R
    bool holds{false};                 // bound satisfied (only meaningful when applicable)
    double discount{0.0};
    Vec price_gradient_F;
    Vec value_gradient;                // finite-difference ∇_p V^new
    Vec bound;                         // (1/2 - f)·R
    Vec margin;                        // bound - value_gradient
    std::string note;
};

// Excess-delta check for one TWM update of size δ. The value gradient is a
// central difference with step 1e-6·p_j.
DeltaBoundReport check_delta_bound(const PriceVector& p, const Vec& R, const Vec& loans, double fee,
                                   const twm::DiscountFn& F, const Vec& target_weights, const Vec& delta,
                                   double slack = 1e-6);

nlohmann::json to_json(const PoolState& pool);
PoolState pool_from_json(const nlohmann::json& j);

} // namespace pdlp::pool
