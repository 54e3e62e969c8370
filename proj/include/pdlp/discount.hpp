#pragma once

#include "pdlp/types.hpp"

#include "json.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pdlp::twm {

using EvalFn = std::function<double(const PriceVector& p, const Vec& target, const Vec& R, const Vec& delta)>;
using GradFn = std::function<Vec(const PriceVector& p, const Vec& target, const Vec& R, const Vec& delta)>;

// Black-box discount rate F(p, w*, R, δ). Copies share the callables, which
// must be reentrant.
class DiscountFn {
public:
    DiscountFn() = default;
    DiscountFn(std::string name, EvalFn eval, double mu = 0.0, std::optional<double> gradient_bound = std::nullopt);

    double evaluate(const PriceVector& p, const Vec& target, const Vec& R, const Vec& delta) const;

    // Gradient in δ: analytic when attached, central differences otherwise.
    Vec gradient(const PriceVector& p, const Vec& target, const Vec& R, const Vec& delta) const;

    // Element of ∂F at δ = 0. Without an analytic gradient this averages the
    // forward differences at +h and -h, h = 1e-6·‖R‖.
    Vec subgradient_at_zero(const PriceVector& p, const Vec& target, const Vec& R) const;

    // Gradient in p at fixed δ; central differences with step 1e-6·p_j
    // unless an analytic form is attached.
    Vec price_gradient(const PriceVector& p, const Vec& target, const Vec& R, const Vec& delta) const;

    double mu() const { return mu_; }
    std::optional<double> gradient_bound() const { return gradient_bound_; }
    const std::string& name() const { return name_; }
    bool has_gradient() const { return static_cast<bool>(grad_); }
    bool has_price_gradient() const { return static_cast<bool>(price_grad_); }
    bool valid() const { return static_cast<bool>(eval_); }

    DiscountFn& set_gradient(GradFn g);
    DiscountFn& set_price_gradient(GradFn g);
    DiscountFn& set_mu(double mu);
    DiscountFn& set_gradient_bound(std::optional<double> G);

private:
    std::string name_;
    EvalFn eval_;
    GradFn grad_;
    GradFn price_grad_;
    double mu_{0.0};
    std::optional<double> gradient_bound_;
};

struct GmxParams {
    double base{0.001};
    double tax{0.01};

    void validate() const;
};

double gmx_discount(const PriceVector& p, const Vec& target, const Vec& R, const Vec& delta, const GmxParams& params);

DiscountFn make_gmx(const GmxParams& params);
DiscountFn make_zero();
DiscountFn make_constant(double value);

// F(δ) - F(0).
DiscountFn recentered(const DiscountFn& raw);

// gᵀδ - (μ/2)‖δ‖², independent of (p, w*, R).
DiscountFn make_linear_quadratic(Vec g, double mu, std::optional<double> gradient_bound = std::nullopt);

// Minimum-norm trade d with w(p, R + d) = w*.
Vec target_trade(const PriceVector& p, const Vec& target, const Vec& R);

// -(μ/2)‖δ - d‖² + (μ/2)‖d‖² with d = target_trade(p, w*, R): the unique
// maximizer hits the target weights.
DiscountFn make_target_quadratic(double mu);

struct AffinePiece {
    double intercept{0.0};
    Vec slope;
};

// min_k(a_k + b_kᵀδ) - min_k a_k - (μ/2)‖δ‖².
DiscountFn make_table(std::vector<AffinePiece> pieces, double mu);

// Box on which the smoothing searches for raw's maximizer, relative to the
// pool: δ_i in [-withdraw_fraction·R_i, deposit_fraction·pᵀR / p_i].
struct SmoothingOptions {
    double withdraw_fraction{0.9};
    double deposit_fraction{1.0};
    int lattice_points{41};
    int random_samples{4096};
    int max_iterations{500};
    double step_tolerance{1e-10};
    std::uint64_t seed{0x5eedULL};
};

struct SmoothingTrace {
    std::vector<double> objective;
    std::vector<double> step_norm;
};

// Maximizer of raw on the smoothing box for one context, with the search
// trace of the refinement.
struct SmoothingAnchor {
    Vec point;
    double value{0.0};
    SmoothingTrace trace;
};

SmoothingAnchor find_anchor(const DiscountFn& raw, const PriceVector& p, const Vec& target, const Vec& R,
                            const SmoothingOptions& options = {});

// μ-strongly concave model of raw: raw(z*) - (μ/2)‖δ - z*‖² with z* the
// maximizer of raw on the smoothing box (ties go to the point closest to the
// target weights, then to the smallest trade). Equal to raw at z*.
DiscountFn smooth_discount(const DiscountFn& raw, double mu, const SmoothingOptions& options = {});

// Recentered smoothing of the recentered GMX function; what solvers use.
DiscountFn make_smoothed_gmx(const GmxParams& params, double mu, const SmoothingOptions& options = {});

// Default curvature for GMX smoothing: tax / (pᵀR)².
double default_gmx_mu(const GmxParams& params, const PriceVector& p, const Vec& R);

struct Surrogate {
    Vec g;
    double mu{0.0};
    Vec delta_h;

    double value(const Vec& delta) const;
};

Surrogate surrogate(const DiscountFn& fn, const PriceVector& p, const Vec& target, const Vec& R);

struct GapBounds {
    double fh{0.0};               // ‖δ_F - δ_H‖ <= 2G/μ
    double fh_unconstrained{0.0}; // ‖δ_F - δ_H‖ <= √G/μ when the box is inactive
    double sh{0.0};               // ‖δ_S - δ_H‖ <= 4G/μ
    std::optional<double> objective; // S(δ_S) - S(δ_F) <= (40 + 8/C)‖p‖₂ G³/μ²
};

// G bounds max‖∇f‖² over the domain.
GapBounds gap_bounds(double G, double mu, const PriceVector* p = nullptr);
GapBounds surrogate_gap_bounds(const DiscountFn& fn, const PriceVector* p = nullptr);

// Builds a discount from a config stanza {family: gmx|quadratic|custom-table|zero, ...}.
// The pool context supplies the default GMX curvature.
DiscountFn discount_from_config(const nlohmann::json& stanza, const PriceVector& p0, const Vec& R0);

} // namespace pdlp::twm
