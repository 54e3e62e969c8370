#include "pdlp/arbitrage.hpp"

#include "pdlp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <string>

namespace pdlp::arb {

ConstantProductExchange::ConstantProductExchange(double r1, double r2) : r1_(r1), r2_(r2)
{
    if (!(r1 > 0.0) || !(r2 > 0.0)) {
        throw InvalidArgumentError("constant-product reserves must be positive");
    }
}

GenericExchange::GenericExchange(std::function<double(double)> value, std::function<double(double)> slope)
    : value_(std::move(value)), slope_(std::move(slope))
{
    if (!value_ || !slope_) {
        throw InvalidArgumentError("exchange function needs value and slope");
    }
}

namespace {

SwapArb finish(const ForwardExchangeFn& G, double p, double x, bool closed)
{
    SwapArb out;
    out.x = x;
    out.out = G.value(x);
    out.profit = p * out.out - x;
    out.lp_loss = x - p * out.out;
    out.closed_form = closed;
    return out;
}

} // namespace

SwapArb optimal_swap_arb_bisection(const ForwardExchangeFn& G, double p, double tol)
{
    if (!(p > 0.0)) {
        throw InvalidArgumentError("price must be positive");
    }
    const double target = 1.0 / p;
    if (!(G.initial_slope() > target)) {
        return finish(G, p, 0.0, false);
    }
    double lo = 0.0;
    double hi = 1.0;
    int doublings = 0;
    while (G.slope(hi) > target) {
        lo = hi;
        hi *= 2.0;
        if (++doublings > 2000 || !std::isfinite(hi)) {
            throw InvalidArgumentError("exchange slope never falls to 1/p; arbitrage is unbounded");
        }
    }
    while (hi - lo > tol * hi) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        if (G.slope(mid) > target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return finish(G, p, 0.5 * (lo + hi), false);
}

SwapArb optimal_swap_arb(const ForwardExchangeFn& G, double p)
{
    if (const auto* cp = dynamic_cast<const ConstantProductExchange*>(&G)) {
        if (!(p > 0.0)) {
            throw InvalidArgumentError("price must be positive");
        }
        if (!(p * cp->r2() > cp->r1())) {
            return finish(G, p, 0.0, true);
        }
        SwapArb out = finish(G, p, std::sqrt(p * cp->r1() * cp->r2()) - cp->r1(), true);
        // R1 + p·R2 - 2√(p·R1·R2) written as a square, avoiding cancellation.
        const double gap = std::sqrt(cp->r1()) - std::sqrt(p * cp->r2());
        out.lp_loss = -gap * gap;
        out.profit = -out.lp_loss;
        return out;
    }
    return optimal_swap_arb_bisection(G, p);
}

SwapArb optimal_reverse_swap_arb(const ConstantProductExchange& G, double p)
{
    if (!(p > 0.0)) {
        throw InvalidArgumentError("price must be positive");
    }
    SwapArb out;
    out.closed_form = true;
    if (!(p * G.r2() < G.r1())) {
        return out;
    }
    const double root = std::sqrt(G.r1() * G.r2() / p);
    out.x = root - G.r2();
    out.out = G.r1() * out.x / (G.r2() + out.x);
    // Profit H(y*) - p·y* = R1 + p·R2 - 2√(p·R1·R2).
    const double root_gap = std::sqrt(G.r1()) - std::sqrt(p * G.r2());
    out.profit = root_gap * root_gap;
    out.lp_loss = -out.profit;
    return out;
}

double funding_arb_size(double L0, double p, double p0)
{
    if (!(L0 > 0.0) || !(p > 0.0) || !(p0 > 0.0)) {
        throw InvalidArgumentError("funding arbitrage needs L0, p, p0 > 0");
    }
    if (p >= p0) {
        return L0 * (p / p0 - 1.0);
    }
    return -L0 * (p0 / p - 1.0);
}

double funding_arb_size(double L, double S, double p, double p0)
{
    if (!(p > 0.0) || !(p0 > 0.0) || L < 0.0 || S < 0.0) {
        throw InvalidArgumentError("funding arbitrage needs L, S >= 0 and p, p0 > 0");
    }
    const double ratio = p / p0;
    const double long_size = S * ratio - L;
    if (long_size >= 0.0) {
        return long_size;
    }
    return -(L / ratio - S);
}

double funding_arb_profit(double ell, double fee, double kappa, double L0, double p, double p0)
{
    if (ell < 0.0) {
        throw InvalidArgumentError("arbitrage size must be nonnegative");
    }
    if (ell == 0.0) {
        return 0.0;
    }
    return kappa * ell / (L0 + ell) * (p / p0 - 1.0) - fee * ell;
}

double funding_arb_profit_short(double s, double fee, double kappa, double S0, double p, double p0)
{
    if (s < 0.0) {
        throw InvalidArgumentError("arbitrage size must be nonnegative");
    }
    if (s == 0.0) {
        return 0.0;
    }
    return kappa * s / (S0 + s) * (p0 / p - 1.0) - fee * s;
}

FeeBand fee_band(double kappa, double L0, double B, const ForwardExchangeFn& G, double p, double p0)
{
    if (!(B > 1.0)) {
        throw InvalidArgumentError("price bound must exceed 1");
    }
    if (!(p > p0) || p > B * p0) {
        throw OutOfBand("price ratio " + std::to_string(p / p0) + " outside (1, " + std::to_string(B) + "]");
    }
    FeeBand band;
    band.price_bound = B;
    band.f_upper = kappa * (1.0 - 1.0 / B) / L0;
    const SwapArb arb = optimal_swap_arb(G, p);
    band.x_star = arb.x;
    band.f_lower = (G.value(arb.x) - arb.x / p) / (G.initial_slope() - 1.0 / p) / L0;
    band.f_lower_sufficient = arb.x / L0;
    if (const auto* cp = dynamic_cast<const ConstantProductExchange*>(&G)) {
        band.f_lower_bundled = (B - 1.0) * cp->r1() / L0;
    }
    band.nonempty = band.f_lower <= band.f_upper;
    return band;
}

double lp_single_period_profit(double fee, double L0, const ForwardExchangeFn& G, double p, double p0)
{
    const double ell = L0 * (p / p0 - 1.0);
    return fee * ell + optimal_swap_arb(G, p).lp_loss;
}

void write_trace_csv(std::ostream& os, const std::vector<TracePoint>& trace)
{
    os << "iteration,objective,step_norm\n";
    os.precision(17);
    for (const auto& t : trace) {
        os << t.iteration << ',' << t.objective << ',' << t.step_norm << '\n';
    }
}

namespace {

Vec project(const Vec& x, const Vec& lower, const Vec& upper)
{
    return x.cwiseMax(lower).cwiseMin(upper);
}

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double fx, const Vec& lower,
                const Vec& upper)
{
    Vec g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double width = upper[i] - lower[i];
        if (width <= 0.0) {
            g[i] = 0.0;
            continue;
        }
        const double h = 1e-7 * width;
        Vec up = x;
        Vec down = x;
        up[i] = std::min(upper[i], x[i] + h);
        down[i] = std::max(lower[i], x[i] - h);
        const double span = up[i] - down[i];
        const double fu = up[i] == x[i] ? fx : f(up);
        const double fd = down[i] == x[i] ? fx : f(down);
        g[i] = span > 0.0 ? (fu - fd) / span : 0.0;
    }
    return g;
}

bool improved_enough(double before, double after, double rel_tol)
{
    return after - before > rel_tol * std::max(std::abs(before), 1e-300);
}

} // namespace

BoxResult maximize_on_box(const std::function<double(const Vec&)>& objective, const Vec& lower, const Vec& upper,
                          const std::vector<Vec>& starts, const SolverOptions& options)
{
    const auto n = lower.size();
    if (upper.size() != n || ((upper - lower).array() < 0.0).any()) {
        throw InvalidArgumentError("solver box is empty or malformed");
    }
    const Vec width = upper - lower;
    const double box_inf = width.size() > 0 ? width.maxCoeff() : 0.0;
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    BoxResult best;
    best.value = -std::numeric_limits<double>::infinity();
    auto consider = [&](const Vec& x, double v) {
        if (v > best.value) {
            best.value = v;
            best.x = x;
        }
    };

    std::vector<std::pair<double, Vec>> seeds;
    for (const auto& s : starts) {
        Vec x = project(s, lower, upper);
        const double v = objective(x);
        seeds.emplace_back(v, x);
        consider(x, v);
    }
    double g_est = 0.0;
    std::vector<std::pair<double, Vec>> probes;
    for (int k = 0; k < options.probes; ++k) {
        Vec x(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            x[i] = lower[i] + unit(rng) * width[i];
        }
        const double v = objective(x);
        g_est = std::max(g_est, fd_gradient(objective, x, v, lower, upper).norm());
        consider(x, v);
        probes.emplace_back(v, std::move(x));
    }
    if (n >= 1 && n <= 3 && options.lattice_budget > 0) {
        const int per_axis =
            std::max(3, static_cast<int>(std::floor(std::pow(options.lattice_budget, 1.0 / static_cast<double>(n)))));
        long total = 1;
        for (Eigen::Index i = 0; i < n; ++i) {
            total *= per_axis;
        }
        Vec x(n);
        for (long idx = 0; idx < total; ++idx) {
            long rest = idx;
            for (Eigen::Index i = 0; i < n; ++i) {
                x[i] = lower[i] + width[i] * static_cast<double>(rest % per_axis) / (per_axis - 1);
                rest /= per_axis;
            }
            const double v = objective(x);
            consider(x, v);
            probes.emplace_back(v, x);
        }
    }
    std::sort(probes.begin(), probes.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int k = 0; k < options.restarts && k < static_cast<int>(probes.size()); ++k) {
        seeds.push_back(probes[static_cast<std::size_t>(k)]);
    }

    if (box_inf > 0.0) {
        for (auto& [fx, x] : seeds) {
            double local_g = g_est;
            if (local_g == 0.0) {
                local_g = fd_gradient(objective, x, fx, lower, upper).norm();
            }
            if (local_g == 0.0) {
                continue;
            }
            const double a = box_inf / (10.0 * local_g);
            for (int k = 0; k < options.max_iterations; ++k) {
                const Vec g = fd_gradient(objective, x, fx, lower, upper);
                if (g.norm() == 0.0) {
                    break;
                }
                double step = a / (1.0 + k);
                Vec y = project(x + step * g, lower, upper);
                double fy = objective(y);
                int halvings = 0;
                while (fy < fx && halvings < 40) {
                    step *= 0.5;
                    y = project(x + step * g, lower, upper);
                    fy = objective(y);
                    ++halvings;
                }
                if (fy < fx) {
                    break;
                }
                const double moved = (y - x).norm();
                const bool progress = improved_enough(fx, fy, options.relative_tolerance);
                x = y;
                fx = fy;
                ++best.iterations;
                if (options.record_trace) {
                    best.trace.push_back({best.iterations, fx, moved});
                }
                if (!progress) {
                    break;
                }
            }
            consider(x, fx);
        }
    }

    // Pattern search over coordinate and pairwise diagonal directions.
    if (box_inf > 0.0 && std::isfinite(best.value)) {
        std::vector<Vec> dirs;
        for (Eigen::Index i = 0; i < n; ++i) {
            Vec e = Vec::Zero(n);
            e[i] = width[i];
            dirs.push_back(e);
            dirs.push_back(-e);
            if (n <= 4) {
                for (Eigen::Index j = i + 1; j < n; ++j) {
                    for (double si : {1.0, -1.0}) {
                        for (double sj : {1.0, -1.0}) {
                            Vec d = Vec::Zero(n);
                            d[i] = si * width[i];
                            d[j] = sj * width[j];
                            dirs.push_back(d);
                        }
                    }
                }
            }
        }
        Vec x = best.x;
        double fx = best.value;
        for (double t = 0.05; t > 1e-13;) {
            bool moved = false;
            for (const auto& d : dirs) {
                const Vec y = project(x + t * d, lower, upper);
                if (y == x) {
                    continue;
                }
                const double fy = objective(y);
                if (fy > fx) {
                    if (options.record_trace) {
                        best.trace.push_back({best.iterations + 1, fy, (y - x).norm()});
                    }
                    ++best.iterations;
                    x = y;
                    fx = fy;
                    moved = true;
                }
            }
            if (!moved) {
                t *= 0.5;
            }
        }
        consider(x, fx);
    }
    return best;
}

namespace {

double checked_eval(const twm::DiscountFn& F, const PriceVector& p, const Vec& w, const Vec& R, const Vec& d)
{
    try {
        return F.evaluate(p, w, R, d);
    } catch (const BlackBoxFailure&) {
        throw;
    } catch (const Error& e) {
        throw BlackBoxFailure(std::string("discount '") + F.name() + "' failed at a probe: " + e.what());
    }
}

void add_vertices(std::vector<Vec>& starts, const Vec& lower, const Vec& upper)
{
    const auto n = lower.size();
    if (n > 3) {
        return;
    }
    for (int mask = 0; mask < (1 << n); ++mask) {
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            v[i] = (mask >> i) & 1 ? upper[i] : lower[i];
        }
        starts.push_back(std::move(v));
    }
}

} // namespace

CreationSolution solve_creation_arb(const twm::DiscountFn& F, const PriceVector& p, const Vec& target, const Vec& R,
                                    const Vec& available, const SolverOptions& options)
{
    const auto n = R.size();
    if (p.size() != n || available.size() != n || target.size() != n) {
        throw InvalidArgumentError("creation arbitrage dimensions disagree");
    }
    const Vec upper = (options.trade_cap_fraction * p.values().dot(R)) / p.values().array();
    const Vec lower = options.deposits_only ? Vec(Vec::Zero(n)) : Vec(-available.cwiseMin(upper));
    auto objective = [&](const Vec& d) { return checked_eval(F, p, target, R, d) * p.values().dot(d); };

    CreationSolution sol;
    std::vector<Vec> starts{Vec::Zero(n)};
    if (F.mu() > 0.0) {
        const twm::Surrogate s = twm::surrogate(F, p, target, R);
        sol.delta_h = project(s.delta_h, lower, upper);
        sol.surrogate_start_objective = objective(sol.delta_h);
        if (sol.surrogate_start_objective < 0.0) {
            sol.delta_h = project(Vec::Zero(R.size()), lower, upper);
            sol.surrogate_start_objective = objective(sol.delta_h);
        }
        starts.push_back(sol.delta_h);
        if (F.gradient_bound()) {
            sol.certified_gap = twm::gap_bounds(*F.gradient_bound(), F.mu(), &p).objective;
        }
    }
    add_vertices(starts, lower, upper);
    BoxResult r = maximize_on_box(objective, lower, upper, starts, options);
    if (r.value <= 0.0) {
        sol.delta = Vec::Zero(n);
        sol.objective = 0.0;
    } else {
        sol.delta = r.x;
        sol.objective = r.value;
    }
    sol.trace = std::move(r.trace);
    return sol;
}

RedemptionSolution solve_redemption_arb(const twm::DiscountFn& F, const PriceVector& p, const Vec& target,
                                        const Vec& R, const Vec& available, double shares,
                                        const SolverOptions& options)
{
    const auto n = R.size();
    if (p.size() != n || available.size() != n || target.size() != n) {
        throw InvalidArgumentError("redemption arbitrage dimensions disagree");
    }
    if (!(shares > 0.0)) {
        throw InvalidArgumentError("shares outstanding must be positive");
    }
    const Vec lower = Vec::Zero(n);
    const Vec cap = (options.trade_cap_fraction * p.values().dot(R)) / p.values().array();
    const Vec upper = available.cwiseMax(0.0).cwiseMin(cap);
    auto discount = [&](const Vec& lambda) {
        const double f = checked_eval(F, p, target, R, -lambda);
        if (!(f > -1.0)) {
            throw InvalidDiscount("redemption discount reached " + std::to_string(f) + " <= -1");
        }
        return f;
    };
    auto objective = [&](const Vec& lambda) {
        if (lambda.isZero(0.0)) {
            return 0.0;
        }
        const double f = discount(lambda);
        return p.values().dot(lambda) * f / (1.0 + f);
    };

    std::vector<Vec> starts{Vec::Zero(n)};
    if (F.mu() > 0.0) {
        // The surrogate of f(λ) = F(-λ) peaks at -g/μ; only used where f >= 0.
        const twm::Surrogate s = twm::surrogate(F, p, target, R);
        const Vec start = project(-s.delta_h, lower, upper);
        if (!start.isZero(0.0) && discount(start) >= 0.0) {
            starts.push_back(start);
        }
    }
    add_vertices(starts, lower, upper);
    BoxResult r = maximize_on_box(objective, lower, upper, starts, options);

    RedemptionSolution sol;
    sol.trace = std::move(r.trace);
    if (r.value <= 0.0) {
        sol.lambda = Vec::Zero(n);
        return sol;
    }
    sol.lambda = r.x;
    sol.discount = discount(sol.lambda);
    sol.objective = r.value;
    const double value = p.values().dot(R);
    const double basket = p.values().dot(sol.lambda);
    sol.sigma = basket / ((1.0 + sol.discount) * value / shares);
    if (sol.sigma > shares) {
        throw InfeasibleRedemption("optimal basket needs more shares than exist");
    }
    sol.profit = basket - (value / shares) * sol.sigma;
    return sol;
}

} // namespace pdlp::arb
