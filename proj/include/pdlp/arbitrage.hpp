#pragma once

#include "pdlp/discount.hpp"
#include "pdlp/types.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace pdlp::arb {

// Numéraire-in to asset-out quote G of the pool; concave, nondecreasing,
// G(0) = 0, G'(0) = 1/p0.
class ForwardExchangeFn {
public:
    virtual ~ForwardExchangeFn() = default;
    virtual double value(double x) const = 0;
    virtual double slope(double x) const = 0;

    double initial_slope() const { return slope(0.0); }
    double reference_price() const { return 1.0 / initial_slope(); }
};

// G(x) = R2·x / (R1 + x), quoting R1/R2 at x = 0.
class ConstantProductExchange final : public ForwardExchangeFn {
public:
    ConstantProductExchange(double r1, double r2);
    static ConstantProductExchange at_price(double depth, double p0) { return {depth, depth / p0}; }

    double value(double x) const override { return r2_ * x / (r1_ + x); }
    double slope(double x) const override { return r1_ * r2_ / ((r1_ + x) * (r1_ + x)); }
    double r1() const { return r1_; }
    double r2() const { return r2_; }

private:
    double r1_;
    double r2_;
};

class GenericExchange final : public ForwardExchangeFn {
public:
    GenericExchange(std::function<double(double)> value, std::function<double(double)> slope);
    double value(double x) const override { return value_(x); }
    double slope(double x) const override { return slope_(x); }

private:
    std::function<double(double)> value_;
    std::function<double(double)> slope_;
};

struct SwapArb {
    double x{0.0};       // numéraire paid into the pool (asset paid in for the mirrored case)
    double out{0.0};     // amount received from the pool
    double profit{0.0};  // arbitrageur profit in numéraire, >= 0
    double lp_loss{0.0}; // change in pool value, <= 0
    bool closed_form{false};
};

// Solves G'(x*) = 1/p for p > p0 (x* = 0 otherwise): closed form for the
// constant-product family, monotone bisection on G' otherwise.
SwapArb optimal_swap_arb(const ForwardExchangeFn& G, double p);
SwapArb optimal_swap_arb_bisection(const ForwardExchangeFn& G, double p, double tol = 1e-12);

// Mirrored case p < p0 for the constant-product family: the arbitrageur sells
// y units of the asset for H(y) = R1·y / (R2 + y) numéraire, y* = √(R1R2/p) - R2.
SwapArb optimal_reverse_swap_arb(const ConstantProductExchange& G, double p);

// Signed size that zeroes the funding rate: L0(p/p0 - 1) long when p > p0,
// and the mirrored short L0(p0/p - 1) reported as a negative number.
double funding_arb_size(double L0, double p, double p0);

// General book: long S·p/p0 - L when positive, otherwise short L·p0/p - S
// reported as a negative number.
double funding_arb_size(double L, double S, double p, double p0);

// (κℓ / (L0 + ℓ))·(p/p0 - 1) - f·ℓ for a long of size ℓ >= 0.
double funding_arb_profit(double ell, double fee, double kappa, double L0, double p, double p0);

// Mirrored profit for a short of size s >= 0 when p < p0.
double funding_arb_profit_short(double s, double fee, double kappa, double S0, double p, double p0);

struct FeeBand {
    double price_bound{1.0};
    double f_upper{0.0};
    double f_lower{0.0};               // exact single-period LP break-even
    double f_lower_sufficient{0.0};    // x*/L0
    std::optional<double> f_lower_bundled; // (B - 1)·R1/L0 for the constant-product family
    double x_star{0.0};
    bool nonempty{false};              // f_lower <= f_upper

    bool contains(double f) const { return f >= f_lower && f <= f_upper; }
};

FeeBand fee_band(double kappa, double L0, double B, const ForwardExchangeFn& G, double p, double p0);

// fℓ + x* - p·G(x*) with ℓ = L0(p/p0 - 1).
double lp_single_period_profit(double fee, double L0, const ForwardExchangeFn& G, double p, double p0);

struct TracePoint {
    int iteration{0};
    double objective{0.0};
    double step_norm{0.0};
};

void write_trace_csv(std::ostream& os, const std::vector<TracePoint>& trace);

struct SolverOptions {
    int max_iterations{2000};
    double relative_tolerance{1e-10};
    int probes{32};
    int lattice_budget{512}; // uniform lattice probes for n <= 3; 0 disables
    int restarts{4};
    bool deposits_only{false};
    double trade_cap_fraction{1.0}; // |Δ_i|, λ_i <= cap·pᵀR / p_i
    std::uint64_t seed{1};
    bool record_trace{false};
};

struct BoxResult {
    Vec x;
    double value{0.0};
    int iterations{0};
    std::vector<TracePoint> trace;
};

// Maximizes a black-box objective on [lower, upper]: multi-start projected
// supergradient ascent with steps a/(1+k), a = ‖box‖∞ / (10·G_est), followed
// by a shrinking pattern search. Starts are evaluated as given (projected);
// the best random and lattice probes are added as further starts.
BoxResult maximize_on_box(const std::function<double(const Vec&)>& objective, const Vec& lower, const Vec& upper,
                          const std::vector<Vec>& starts, const SolverOptions& options);

struct CreationSolution {
    Vec delta;
    double objective{0.0};
    Vec delta_h;                        // projected surrogate start, or 0 if that loses (empty without μ)
    double surrogate_start_objective{0.0};
    std::optional<double> certified_gap; // a-priori suboptimality bound when μ and G are known
    std::vector<TracePoint> trace;
};

// maximize F(Δ)·pᵀΔ subject to -R^A <= Δ <= cap·pᵀR/p (or 0 <= Δ when
// deposits_only).
CreationSolution solve_creation_arb(const twm::DiscountFn& F, const PriceVector& p, const Vec& target, const Vec& R,
                                    const Vec& available, const SolverOptions& options = {});

struct RedemptionSolution {
    Vec lambda;
    double discount{0.0}; // f(λ*) = F(-λ*)
    double sigma{0.0};
    double objective{0.0}; // pᵀλ·f/(1+f)
    double profit{0.0};    // pᵀλ - p_mkt·σ with p_mkt = pᵀR / S
    std::vector<TracePoint> trace;
};

// maximize pᵀλ·f(λ)/(1 + f(λ)) with f(λ) = F(-λ) subject to 0 <= λ <= R^A.
RedemptionSolution solve_redemption_arb(const twm::DiscountFn& F, const PriceVector& p, const Vec& target,
                                        const Vec& R, const Vec& available, double shares,
                                        const SolverOptions& options = {});

} // namespace pdlp::arb
