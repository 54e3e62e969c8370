#include "pdlp/verify.hpp"

#include "pdlp/arbitrage.hpp"
#include "pdlp/discount.hpp"
#include "pdlp/errors.hpp"
#include "pdlp/hedging.hpp"
#include "pdlp/perp_market.hpp"
#include "pdlp/pool.hpp"
#include "pdlp/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

namespace pdlp::verify {

namespace {

#ifdef PDLP_VERIFY_INJECT_FAULT
constexpr double kInjectedFault = 1e-6;
#else
constexpr double kInjectedFault = 0.0;
#endif

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(gen_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }
    int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(gen_); }
    Vec uniform_vec(Eigen::Index n, double a, double b)
    {
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            v[i] = uniform(a, b);
        }
        return v;
    }
    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

using Clock = std::chrono::steady_clock;

CriterionResult make_result(int id, std::string name, std::string suite)
{
    CriterionResult r;
    r.id = id;
    r.name = std::move(name);
    r.suite = std::move(suite);
    return r;
}

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt_double(double x)
{
    std::ostringstream os;
    os << std::setprecision(6) << x;
    return os.str();
}

// Random symmetric positive definite matrix with eigenvalues in [lo, hi].
Mat random_pd(Rng& rng, Eigen::Index n, double lo, double hi)
{
    Mat m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            m(i, j) = rng.normal();
        }
    }
    Eigen::HouseholderQR<Mat> qr(m);
    const Mat q = qr.householderQ();
    const Vec d = rng.uniform_vec(n, lo, hi);
    Mat s = q * d.asDiagonal() * q.transpose();
    return 0.5 * (s + s.transpose());
}

// ---------------------------------------------------------------- funding

CriterionResult funding_example()
{
    CriterionResult r = make_result(1, "funding-rate example", "funding");
    perp::PerpMarket m{1000.0, 250.0, 2000.0, 0.01};
    const auto t0 = Clock::now();
    const double gamma = perp::funding_rate(m, 2000.0) * (1.0 + kInjectedFault);
    r.seconds = seconds_since(t0);
    r.measured = gamma;
    r.expected = 0.03;
    r.tolerance = 0.0;
    // 3κ for a second coefficient as well.
    m.kappa = 0.037;
    const bool scaled = perp::funding_rate(m, 2000.0) == 3.0 * 0.037;
    r.passed = gamma == 0.03 && scaled && r.seconds < 1e-3;
    r.note = std::string("bitwise 0.03; 3κ at κ=0.037 ") + (scaled ? "ok" : "mismatch");
    return r;
}

CriterionResult liquidation_threshold()
{
    CriterionResult r = make_result(2, "liquidation threshold", "funding");
    perp::TraderPosition pos;
    pos.collateral = 2000.0;
    pos.size = 4.0;
    pos.leverage = 4.0;
    pos.entry_price = 2000.0;
    const auto t0 = Clock::now();
    const bool at = perp::is_liquidatable(pos, 1500.0);
    const bool above = perp::is_liquidatable(pos, 1500.0 + 1e-9);
    const double threshold = perp::liquidation_price(pos);
    r.seconds = seconds_since(t0);
    r.measured = threshold;
    r.expected = 2000.0 * (1.0 - 1.0 / 4.0);
    r.tolerance = 0.0;
    r.passed = at && !above && threshold == r.expected && perp::check_collateral(pos) && r.seconds < 1e-3;
    r.note = std::string("liquidates at 1500: ") + (at ? "yes" : "no") + ", at 1500+1e-9: " + (above ? "yes" : "no");
    return r;
}

CriterionResult arb_size_zero_point()
{
    CriterionResult r = make_result(3, "arbitrage size zeroes the funding rate", "funding");
    Rng rng(3);
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double L0 = rng.uniform(1.0, 1e4);
        double ratio = 1.0 + rng.uniform(0.0, 1.0);
        if (ratio <= 1.0) {
            ratio = 2.0;
        }
        const double p0 = rng.uniform(1.0, 5000.0);
        const double p = p0 * ratio;
        const double kappa = rng.uniform(0.001, 1.0);
        const double ell = arb::funding_arb_size(L0, p, p0);
        const perp::PerpMarket m{L0 + ell, L0, p0, kappa};
        worst = std::max(worst, std::abs(perp::funding_rate(m, p)));
    }
    r.seconds = seconds_since(t0);
    r.measured = worst;
    r.expected = 0.0;
    r.tolerance = 1e-12;
    r.passed = worst <= r.tolerance;
    r.note = "max |γ| over 1000 draws";
    return r;
}

// --------------------------------------------------------------- fee band

CriterionResult fee_band_profits()
{
    CriterionResult r = make_result(4, "fee band keeps both sides profitable", "fee-band");
    Rng rng(4);
    const auto t0 = Clock::now();
    int funding_negative = 0;
    int lp_negative = 0;
    double worst_funding = 0.0;
    double worst_lp = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double kappa = rng.uniform(0.01, 0.2);
        const double L0 = rng.uniform(100.0, 1e4);
        const double B = rng.uniform(1.01, 1.5);
        const double p0 = rng.uniform(1.0, 3000.0);
        const double R1 = rng.uniform(100.0, 1e5);
        double ratio = rng.uniform(1.0, B);
        if (ratio <= 1.0) {
            ratio = B;
        }
        const double p = p0 * ratio;
        const auto G = arb::ConstantProductExchange::at_price(R1, p0);
        const arb::FeeBand band = arb::fee_band(kappa, L0, B, G, p, p0);
        const double ell = arb::funding_arb_size(L0, p, p0);

        const double f_fund = 0.99 * band.f_upper;
        const double funding = arb::funding_arb_profit(ell, f_fund, kappa, L0, p, p0);
        if (funding < 0.0) {
            ++funding_negative;
            worst_funding = std::min(worst_funding, funding);
        }

        const double f_lp = std::max(band.f_lower_bundled.value_or(0.0), band.x_star / L0);
        const double lp = arb::lp_single_period_profit(f_lp, L0, G, p, p0);
        if (lp < -1e-9) {
            ++lp_negative;
            worst_lp = std::min(worst_lp, lp);
        }
    }
    r.seconds = seconds_since(t0);
    r.measured = funding_negative + lp_negative;
    r.expected = 0.0;
    r.tolerance = 1e-9;
    r.passed = funding_negative == 0 && lp_negative == 0 && r.seconds < 5.0;
    r.note = "f=0.99·f_upper: " + std::to_string(funding_negative) + "/1000 negative funding-arb profits (worst " +
             fmt_double(worst_funding) + "); f=max((B-1)R1/L0, x*/L0): " + std::to_string(lp_negative) +
             "/1000 LP profits below -1e-9 (worst " + fmt_double(worst_lp) + ")";
    return r;
}

CriterionResult swap_closed_forms()
{
    CriterionResult r = make_result(5, "constant-product closed forms", "fee-band");
    Rng rng(5);
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double R1 = rng.uniform(10.0, 1e6);
        const double p0 = rng.uniform(0.1, 5000.0);
        const double R2 = R1 / p0;
        const double p = p0 * rng.uniform(1.0001, 3.0);
        const arb::ConstantProductExchange G(R1, R2);
        const double x_closed = std::sqrt(p * R1 * R2) - R1;
        const double root_gap = std::sqrt(R1) - std::sqrt(p * R2);
        const double loss_closed = root_gap * root_gap;
        const arb::SwapArb bis = arb::optimal_swap_arb_bisection(G, p);
        worst = std::max(worst, std::abs(bis.x - x_closed) / std::abs(x_closed));
        worst = std::max(worst, std::abs(-bis.lp_loss - loss_closed) / std::abs(loss_closed));
    }
    const arb::ConstantProductExchange ex(2000.0, 1.0);
    const arb::SwapArb a = arb::optimal_swap_arb(ex, 2420.0);
    const double ex_err = std::max(std::abs(a.x - 200.0), std::abs(-a.lp_loss - 20.0));
    r.seconds = seconds_since(t0);
    r.measured = worst;
    r.expected = 0.0;
    r.tolerance = 1e-9;
    r.passed = worst <= 1e-9 && ex_err <= 1e-9;
    r.note = "max relative gap closed form vs bisection; worked instance x*=" + fmt_double(a.x) + ", loss " +
             fmt_double(-a.lp_loss);
    return r;
}

// -------------------------------------------------------------- surrogate

// gᵀδ - (μ/2)‖δ‖² - a(√(s² + ‖δ - c‖²) - √(s² + ‖c‖²)) on [-2, 2]².
struct TestFunction {
    double mu;
    Vec g;
    double a;
    double s;
    Vec c;
    Vec p;
    double C;

    double f(double x, double y) const
    {
        const double dx = x - c[0];
        const double dy = y - c[1];
        return g[0] * x + g[1] * y - 0.5 * mu * (x * x + y * y) -
               a * (std::sqrt(s * s + dx * dx + dy * dy) - std::sqrt(s * s + c.squaredNorm()));
    }
    double S(double x, double y) const { return f(x, y) * (p[0] * x + p[1] * y); }
    double grad_norm(double x, double y) const
    {
        const double dx = x - c[0];
        const double dy = y - c[1];
        const double r = std::sqrt(s * s + dx * dx + dy * dy);
        return std::hypot(g[0] - mu * x - a * dx / r, g[1] - mu * y - a * dy / r);
    }
    Vec grad_at_zero() const { return g + a * c / std::sqrt(s * s + c.squaredNorm()); }
};

TestFunction random_test_function(Rng& rng)
{
    TestFunction t;
    t.mu = rng.uniform(0.5, 2.0);
    t.g = rng.uniform_vec(2, -1.0, 1.0);
    t.a = rng.uniform(0.0, 0.5);
    t.s = rng.uniform(0.2, 1.0);
    t.c = rng.uniform_vec(2, -1.0, 1.0);
    t.C = rng.uniform(0.5, 2.0);
    t.p = rng.uniform_vec(2, t.C, t.C + 2.0);
    return t;
}

struct GridMax {
    double x{0.0};
    double y{0.0};
    double value{-std::numeric_limits<double>::infinity()};
};

GridMax grid_max(const std::function<double(double, double)>& fn, double x0, double x1, double y0, double y1,
                 double step)
{
    GridMax best;
    const int nx = static_cast<int>(std::llround((x1 - x0) / step));
    const int ny = static_cast<int>(std::llround((y1 - y0) / step));
    for (int i = 0; i <= nx; ++i) {
        const double x = x0 + i * step;
        for (int j = 0; j <= ny; ++j) {
            const double y = y0 + j * step;
            const double v = fn(x, y);
            if (v > best.value) {
                best = {x, y, v};
            }
        }
    }
    return best;
}

// Coarse grid of step 0.02 on [-2, 2]², then step 1e-3 in a ±0.04 window.
GridMax box_argmax(const std::function<double(double, double)>& fn)
{
    const GridMax coarse = grid_max(fn, -2.0, 2.0, -2.0, 2.0, 0.02);
    const double x0 = std::max(-2.0, coarse.x - 0.04);
    const double x1 = std::min(2.0, coarse.x + 0.04);
    const double y0 = std::max(-2.0, coarse.y - 0.04);
    const double y1 = std::min(2.0, coarse.y + 0.04);
    const GridMax fine = grid_max(fn, x0, x1, y0, y1, 1e-3);
    return fine.value >= coarse.value ? fine : coarse;
}

struct SurrogateSample {
    double G{0.0};
    double dist_fh{0.0};
    double dist_sh{0.0};
    double gap{0.0};
    twm::GapBounds bounds;
};

SurrogateSample surrogate_sample(const TestFunction& t)
{
    SurrogateSample out;
    double max_grad = 0.0;
    const double h = 0.02;
    for (int i = 0; i <= 200; ++i) {
        for (int j = 0; j <= 200; ++j) {
            max_grad = std::max(max_grad, t.grad_norm(-2.0 + i * h, -2.0 + j * h));
        }
    }
    // Lipschitz constant of ∇f is μ + a/s; every point is within h/√2 of the grid.
    out.G = std::pow(max_grad + (t.mu + t.a / t.s) * h / std::sqrt(2.0), 2);

    twm::DiscountFn fn("test-family",
                       [t](const PriceVector&, const Vec&, const Vec&, const Vec& d) { return t.f(d[0], d[1]); }, t.mu,
                       out.G);
    fn.set_gradient([t](const PriceVector&, const Vec&, const Vec&, const Vec& d) {
        const Vec diff = d - t.c;
        return Vec(t.g - t.mu * d - t.a * diff / std::sqrt(t.s * t.s + diff.squaredNorm()));
    });
    const PriceVector p(t.p);
    const Vec R = Vec::Constant(2, 1.0);
    const Vec w = Vec::Constant(2, 0.5);
    const twm::Surrogate sur = twm::surrogate(fn, p, w, R);
    out.bounds = twm::surrogate_gap_bounds(fn, &p);

    const GridMax F = box_argmax([&t](double x, double y) { return t.f(x, y); });
    const GridMax S = box_argmax([&t](double x, double y) { return t.S(x, y); });
    const Vec dF = make_vec({F.x, F.y});
    const Vec dS = make_vec({S.x, S.y});
    out.dist_fh = (dF - sur.delta_h).norm();
    out.dist_sh = (dS - sur.delta_h).norm();
    out.gap = t.S(S.x, S.y) - t.S(F.x, F.y);
    return out;
}

struct SurrogateStudy {
    int fh_violations{0};
    int sh_violations{0};
    int gap_violations{0};
    double worst_fh_ratio{0.0};
    double worst_sh_ratio{0.0};
    double worst_gap_ratio{0.0};
    double seconds{0.0};
};

const SurrogateStudy& surrogate_study()
{
    static const SurrogateStudy study = [] {
        SurrogateStudy s;
        Rng rng(6);
        const auto t0 = Clock::now();
        for (int i = 0; i < 1000; ++i) {
            const TestFunction t = random_test_function(rng);
            const SurrogateSample x = surrogate_sample(t);
            if (x.G <= 0.0) {
                continue;
            }
            s.fh_violations += x.dist_fh > x.bounds.fh;
            s.sh_violations += x.dist_sh > x.bounds.sh;
            s.gap_violations += x.gap > *x.bounds.objective;
            s.worst_fh_ratio = std::max(s.worst_fh_ratio, x.dist_fh / x.bounds.fh);
            s.worst_sh_ratio = std::max(s.worst_sh_ratio, x.dist_sh / x.bounds.sh);
            s.worst_gap_ratio = std::max(s.worst_gap_ratio, x.gap / *x.bounds.objective);
        }
        s.seconds = seconds_since(t0);
        return s;
    }();
    return study;
}

CriterionResult surrogate_distance()
{
    CriterionResult r = make_result(6, "surrogate maximizer distance bounds", "surrogate");
    const SurrogateStudy& s = surrogate_study();
    r.seconds = s.seconds;
    r.measured = s.fh_violations + s.sh_violations;
    r.expected = 0.0;
    r.tolerance = 0.0;
    r.passed = s.fh_violations == 0 && s.sh_violations == 0 && s.seconds < 30.0;
    r.note = "violations of 2G/μ: " + std::to_string(s.fh_violations) + ", of 4G/μ: " +
             std::to_string(s.sh_violations) + "; worst distance/bound " + fmt_double(s.worst_fh_ratio) + ", " +
             fmt_double(s.worst_sh_ratio);
    return r;
}

CriterionResult surrogate_objective_gap()
{
    CriterionResult r = make_result(7, "surrogate objective gap bound", "surrogate");
    const SurrogateStudy& s = surrogate_study();
    r.seconds = s.seconds;
    r.measured = s.gap_violations;
    r.expected = 0.0;
    r.tolerance = 0.0;
    r.passed = s.gap_violations == 0;
    r.note = "S(δ_S) - S(δ_F) against (40 + 8/C)‖p‖G³/μ²; worst gap/bound " + fmt_double(s.worst_gap_ratio);
    return r;
}

// Best value of a 2-D objective on a box: 201² grid, then two 41² zooms.
double grid_oracle(const std::function<double(const Vec&)>& obj, const Vec& lo, const Vec& hi)
{
    auto fn = [&](double x, double y) { return obj(make_vec({x, y})); };
    double x0 = lo[0];
    double x1 = hi[0];
    double y0 = lo[1];
    double y1 = hi[1];
    int cells = 200;
    GridMax best;
    for (int round = 0; round < 3; ++round) {
        const double hx = (x1 - x0) / cells;
        const double hy = (y1 - y0) / cells;
        GridMax b;
        for (int i = 0; i <= cells; ++i) {
            for (int j = 0; j <= cells; ++j) {
                const double x = x0 + i * hx;
                const double y = y0 + j * hy;
                const double v = fn(x, y);
                if (v > b.value) {
                    b = {x, y, v};
                }
            }
        }
        if (b.value > best.value) {
            best = b;
        }
        x0 = std::max(lo[0], best.x - hx);
        x1 = std::min(hi[0], best.x + hx);
        y0 = std::max(lo[1], best.y - hy);
        y1 = std::min(hi[1], best.y + hy);
        cells = 40;
    }
    return best.value;
}

CriterionResult solvers_vs_grid()
{
    CriterionResult r = make_result(8, "creation and redemption solvers vs grid search", "surrogate");
    Rng rng(8);
    const auto t0 = Clock::now();
    int failures = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 100; ++i) {
        const PriceVector p(make_vec({1.0, rng.uniform(0.5, 2.0)}));
        const Vec R = rng.uniform_vec(2, 50.0, 150.0);
        const double w0 = rng.uniform(0.3, 0.7);
        const Vec w = make_vec({w0, 1.0 - w0});
        const Vec RA = R.cwiseProduct(rng.uniform_vec(2, 0.5, 1.0));
        const double V = p.values().dot(R);
        twm::DiscountFn F;
        if (i % 2 == 0) {
            const twm::GmxParams params{rng.uniform(0.0005, 0.005), rng.uniform(0.005, 0.05)};
            F = twm::make_smoothed_gmx(params, twm::default_gmx_mu(params, p, R));
        } else {
            F = twm::make_target_quadratic(rng.uniform(0.1, 0.4) / (V * V));
        }
        arb::SolverOptions opts;
        opts.seed = static_cast<std::uint64_t>(i) + 1;

        const arb::CreationSolution cs = arb::solve_creation_arb(F, p, w, R, RA, opts);
        const Vec c_hi = V / p.values().array();
        const double c_grid = grid_oracle(
            [&](const Vec& d) { return F.evaluate(p, w, R, d) * p.values().dot(d); }, -RA, c_hi);
        const double c_margin = cs.objective - c_grid;

        const arb::RedemptionSolution rs = arb::solve_redemption_arb(F, p, w, R, RA, 100.0, opts);
        const double r_grid = grid_oracle(
            [&](const Vec& l) {
                if (l.isZero(0.0)) {
                    return 0.0;
                }
                const double f = F.evaluate(p, w, R, -l);
                return p.values().dot(l) * f / (1.0 + f);
            },
            Vec::Zero(2), RA);
        const double r_margin = rs.objective - r_grid;
        worst = std::min({worst, c_margin, r_margin});
        failures += (c_margin < -1e-6) + (r_margin < -1e-6);
    }
    r.seconds = seconds_since(t0);
    r.measured = worst;
    r.expected = 0.0;
    r.tolerance = 1e-6;
    r.passed = failures == 0 && r.seconds < 60.0;
    r.note = std::to_string(failures) + " of 200 solves below grid - 1e-6; min(solver - grid) shown";
    return r;
}

// ------------------------------------------------------------ delta bound

CriterionResult delta_bound()
{
    CriterionResult r = make_result(9, "excess delta bound", "delta-bound");
    Rng rng(9);
    const auto t0 = Clock::now();
    int applicable = 0;
    int violations = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 100; ++i) {
        const Eigen::Index n = rng.integer(2, 3);
        const PriceVector p(rng.uniform_vec(n, 0.5, 2.0));
        const Vec R = rng.uniform_vec(n, 1.0, 10.0);
        const Vec loans = R.cwiseProduct(rng.uniform_vec(n, 0.0, 1.0));
        const double fee = rng.uniform(0.0, 0.05);
        const Vec w = Vec::Constant(n, 1.0 / static_cast<double>(n));
        const Vec delta = R.cwiseProduct(rng.uniform_vec(n, -0.2, 0.2));
        // F = b + a·log(pᵀR / V_ref) with V_ref fixed in numéraire, so that
        // ∇_pF = a·R / pᵀR clears 8fR / pᵀR when a >= 8f.
        const double a = 8.0 * fee * rng.uniform(1.0, 3.0);
        const double b = rng.uniform(0.0, 0.3);
        const double v_ref = p.values().dot(R) * std::exp(-rng.uniform(0.0, 0.5));
        twm::DiscountFn F("log-value",
                          [R, a, b, v_ref](const PriceVector& q, const Vec&, const Vec&, const Vec&) {
                              return b + a * std::log(q.values().dot(R) / v_ref);
                          });
        F.set_price_gradient([R, a](const PriceVector& q, const Vec&, const Vec&, const Vec&) {
            return Vec(a * R / q.values().dot(R));
        });
        const pool::DeltaBoundReport rep = pool::check_delta_bound(p, R, loans, fee, F, w, delta);
        if (!rep.applicable) {
            continue;
        }
        ++applicable;
        const double m = (rep.margin.array() / R.array()).minCoeff();
        worst = std::min(worst, m);
        violations += !rep.holds;
    }
    r.seconds = seconds_since(t0);
    r.measured = violations;
    r.expected = 0.0;
    r.tolerance = 1e-6;
    r.passed = applicable == 100 && violations == 0;
    r.note = std::to_string(applicable) + " instances meet the hypotheses, " + std::to_string(violations) +
             " violate ∇_pV <= (1/2 - f)R; worst margin/R " + fmt_double(worst);
    return r;
}

// ------------------------------------------------------------------ hedge

// Conjugate gradient on the concave quadratic objective, using only the
// gradient oracle.
Vec maximize_hedge_objective(const hedge::HedgeProblem& prob)
{
    const auto n = prob.n_assets();
    const Vec zero = Vec::Zero(n);
    const Vec g0 = hedge::objective_gradient(prob, zero);
    auto hess = [&](const Vec& v) { return Vec(hedge::objective_gradient(prob, v) - g0); };
    Vec x = zero;
    for (int sweep = 0; sweep < 4; ++sweep) {
        Vec r = hedge::objective_gradient(prob, x);
        Vec d = r;
        for (Eigen::Index k = 0; k < n && r.norm() > 0.0; ++k) {
            const Vec hd = hess(d);
            const double curvature = d.dot(hd);
            if (!(curvature < 0.0)) {
                break;
            }
            const double step = -r.squaredNorm() / curvature;
            x += step * d;
            const Vec r_new = hedge::objective_gradient(prob, x);
            d = r_new + (r_new.squaredNorm() / r.squaredNorm()) * d;
            r = r_new;
        }
    }
    return x;
}

CriterionResult hedge_closed_form()
{
    CriterionResult r = make_result(10, "closed-form hedge vs numerical maximizer", "hedge");
    Rng rng(10);
    const auto t0 = Clock::now();
    double worst_num = 0.0;
    double worst_eq12 = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Eigen::Index n = rng.integer(1, 5);
        hedge::HedgeProblem prob;
        prob.fee = rng.uniform(1e-4, 0.1);
        prob.loans = rng.uniform_vec(n, 0.0, 10.0);
        prob.current_hedge = rng.uniform_vec(n, -5.0, 5.0);
        prob.rebalance_costs = rng.uniform_vec(n, 0.0, 5.0);
        prob.risk_aversion = rng.uniform(0.1, 10.0);
        prob.covariance = random_pd(rng, n, 0.1, 10.0);
        prob.portfolio_delta = rng.uniform_vec(n, 0.0, 10.0);
        prob.reserves = prob.portfolio_delta;

        const Vec closed = hedge::delta_hedge(prob);
        const Vec numeric = maximize_hedge_objective(prob);
        worst_num = std::max(worst_num, (closed - numeric).norm() / std::max(closed.norm(), 1e-12));

        prob.rebalance_costs.setZero();
        const Vec with_zero = hedge::delta_hedge(prob);
        const Vec eq12 = hedge::frictionless_hedge(prob);
        const double scale = (eq12 + prob.portfolio_delta).norm() + prob.portfolio_delta.norm();
        worst_eq12 = std::max(worst_eq12, (with_zero - eq12).norm() / scale);
    }
    r.seconds = seconds_since(t0);
    r.measured = worst_num;
    r.expected = 0.0;
    r.tolerance = 1e-8;
    r.passed = worst_num <= 1e-8 && worst_eq12 <= 1e-12;
    r.note = "max relative gap to conjugate-gradient maximizer; zero-cost vs frictionless formula " +
             fmt_double(worst_eq12) + " (tol 1e-12)";
    return r;
}

} // namespace

HedgeStudy hedge_study(const HedgeStudySetup& setup)
{
    const auto n = setup.reserves.size();
    if (setup.loans.size() != n || n == 0) {
        throw InvalidArgumentError("hedge study needs matching reserves and loans");
    }
    Mat corr = Mat::Constant(n, n, setup.correlation);
    corr.diagonal().setOnes();
    const Vec vol = Vec::Constant(n, setup.volatility);
    const Vec drift = Vec::Zero(n);
    Eigen::LLT<Mat> chol(corr);
    if (chol.info() != Eigen::Success) {
        throw InvalidArgumentError("hedge study correlation is not positive definite");
    }
    const Mat L = chol.matrixL();
    const Vec& R = setup.reserves;
    const Vec& ell = setup.loans;

    HedgeStudy out;
    out.seeds = setup.seeds;
    out.periods = setup.periods;
    std::vector<double> hedged(static_cast<std::size_t>(setup.seeds));
    std::vector<double> unhedged(static_cast<std::size_t>(setup.seeds));
    auto sharpe = [](const std::vector<double>& x) {
        double mean = 0.0;
        for (double v : x) {
            mean += v;
        }
        mean /= static_cast<double>(x.size());
        double ss = 0.0;
        for (double v : x) {
            ss += (v - mean) * (v - mean);
        }
        return mean / std::sqrt(ss / static_cast<double>(x.size() - 1));
    };
    for (int s = 0; s < setup.seeds; ++s) {
        std::mt19937_64 gen(static_cast<std::uint64_t>(s) + 1);
        std::normal_distribution<double> normal(0.0, 1.0);
        Vec p = Vec::Ones(n);
        std::vector<double> h(static_cast<std::size_t>(setup.periods));
        std::vector<double> u(static_cast<std::size_t>(setup.periods));
        for (int t = 0; t < setup.periods; ++t) {
            const hedge::GbmPriceModel model(PriceVector(p), drift, vol, corr);
            const Mat sigma = model.covariance();
            const double lambda = hedge::max_eigenvalue(sigma);
            const double k_lo = lambda * p.dot(R) / p.dot(ell);
            const double k_hi = R.dot(sigma * R) / ell.dot(R);
            const double k = 0.5 * (k_lo + k_hi);

            hedge::HedgeProblem prob;
            prob.fee = setup.fee;
            prob.loans = ell;
            prob.current_hedge = Vec::Zero(n);
            prob.rebalance_costs = Vec::Zero(n);
            prob.risk_aversion = setup.fee / k;
            prob.covariance = sigma;
            prob.portfolio_delta = R;
            prob.reserves = R;
            const hedge::SharpeReport rep = hedge::sharpe_conditions(prob, model);
            out.condition_failures += !rep.verdict;

            Vec z(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                z[i] = normal(gen);
            }
            const Vec shock = L * z;
            Vec next(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                next[i] = p[i] * std::exp(-0.5 * vol[i] * vol[i] + vol[i] * shock[i]);
            }
            const Vec dp = next - p;
            const double base = dp.dot(R) + setup.fee * next.dot(ell);
            u[static_cast<std::size_t>(t)] = base;
            h[static_cast<std::size_t>(t)] = base + rep.hedge.dot(dp);
            p = next;
        }
        hedged[static_cast<std::size_t>(s)] = sharpe(h);
        unhedged[static_cast<std::size_t>(s)] = sharpe(u);
    }
    auto mean_var = [](const std::vector<double>& x) {
        double mean = 0.0;
        for (double v : x) {
            mean += v;
        }
        mean /= static_cast<double>(x.size());
        double ss = 0.0;
        for (double v : x) {
            ss += (v - mean) * (v - mean);
        }
        return std::pair{mean, ss / static_cast<double>(x.size() - 1)};
    };
    const auto [mh, vh] = mean_var(hedged);
    const auto [mu, vu] = mean_var(unhedged);
    out.hedged_sharpe = mh;
    out.unhedged_sharpe = mu;
    out.standard_error = std::sqrt(vh / setup.seeds + vu / setup.seeds);
    return out;
}

namespace {

CriterionResult hedge_monte_carlo()
{
    CriterionResult r = make_result(11, "hedged Sharpe under the Sharpe conditions", "hedge");
    const auto t0 = Clock::now();
    HedgeStudySetup setup;
    setup.reserves = make_vec({1000.0, 400.0});
    setup.loans = make_vec({300.0, 300.0});
    const HedgeStudy s = hedge_study(setup);
    r.seconds = seconds_since(t0);
    r.measured = s.hedged_sharpe;
    r.expected = s.unhedged_sharpe;
    r.tolerance = 2.0 * s.standard_error;
    r.passed = s.condition_failures == 0 && s.hedged_sharpe >= s.unhedged_sharpe - 2.0 * s.standard_error &&
               r.seconds < 300.0;
    r.note = "hedged vs unhedged mean Sharpe over " + std::to_string(s.seeds) + " seeds x " +
             std::to_string(s.periods) + " periods; periods failing the conditions: " +
             std::to_string(s.condition_failures);
    return r;
}

// ------------------------------------------------------------------ schur

CriterionResult schur_criterion()
{
    CriterionResult r = make_result(12, "single-pool Schur criterion", "schur");
    Rng rng(12);
    const auto t0 = Clock::now();

    // Search positive definite covariances of several shapes for one that
    // meets both eigenvalue hypotheses.
    int tried = 0;
    int found = 0;
    int consequence_failures = 0;
    double best_ratio = 0.0;
    for (int i = 0; i < 3000; ++i) {
        const Eigen::Index n = rng.integer(2, 5);
        Mat sigma;
        switch (i % 3) {
        case 0:
            sigma = random_pd(rng, n, 1e-3, 10.0);
            break;
        case 1:
            sigma = random_pd(rng, n, 1e-6, 1.0);
            sigma += 1e-9 * Mat::Identity(n, n);
            break;
        default: {
            // Strong cross-block correlation, near-singular.
            const Vec f = rng.uniform_vec(n, -1.0, 1.0);
            sigma = f * f.transpose() + rng.uniform(1e-6, 1e-2) * Mat::Identity(n, n);
            break;
        }
        }
        std::vector<int> first;
        const int k = rng.integer(1, static_cast<int>(n) - 1);
        for (int j = 0; j < k; ++j) {
            first.push_back(j);
        }
        const auto part = hedge::PoolPartition::split(sigma, first);
        ++tried;
        const hedge::SinglePoolReport rep = hedge::single_pool_better(part, 1000, static_cast<std::uint64_t>(i) + 1);
        best_ratio = std::max(best_ratio, rep.sigma_min_schur_A / rep.sigma_max_A);
        if (rep.applicable) {
            ++found;
            consequence_failures += rep.samples - rep.consequence_holds;
        }
    }

    // An indefinite matrix with positive definite diagonal blocks does meet
    // the hypotheses; report what the consequence does there.
    const Mat indefinite = (Mat(2, 2) << 1.0, 2.0, 2.0, 1.0).finished();
    const hedge::SinglePoolReport ind =
        hedge::single_pool_better(hedge::PoolPartition::split(indefinite, {0}), 1000, 7);

    const Mat block = (Mat(3, 3) << 2.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 3.0).finished();
    const hedge::SinglePoolReport diag = hedge::single_pool_better(hedge::PoolPartition::split(block, {0, 1}));
    const bool diag_ok = !diag.applicable && diag.note.rfind("not applicable", 0) == 0;

    r.seconds = seconds_since(t0);
    r.measured = found;
    r.expected = 1.0;
    r.tolerance = 0.0;
    r.passed = found > 0 && consequence_failures == 0 && diag_ok;
    r.note = std::to_string(found) + " of " + std::to_string(tried) +
             " positive definite covariances meet σ_min(Σ/A) > σ_max(A) and σ_min(Σ/C) > σ_max(C) (best σ_min(Σ/A)/σ_max(A) " +
             fmt_double(best_ratio) + "); indefinite [[1,2],[2,1]] meets them and the consequence holds on " +
             std::to_string(ind.consequence_holds) + "/" + std::to_string(ind.samples) +
             " samples; block-diagonal reported " + (diag_ok ? "not applicable" : "applicable");
    return r;
}

// -------------------------------------------------------------- simulator

std::string run_text(const sim::RunResult& res)
{
    std::ostringstream os;
    sim::write_metrics_csv(os, res.periods);
    os << res.summary.to_json().dump(2);
    return os.str();
}

CriterionResult simulator_accounting()
{
    CriterionResult r = make_result(13, "simulator accounting identity and determinism", "simulator");
    const auto t0 = Clock::now();
    double worst = 0.0;
    int halted = 0;
    int nondeterministic = 0;
    std::string first_error;
    for (int i = 0; i < 50; ++i) {
        for (auto timing : {sim::FeeTiming::BeforeLpUpdates, sim::FeeTiming::EndOfStep}) {
            sim::ScenarioConfig cfg = smoke_scenario(i);
            cfg.fee_timing = timing;
            try {
                const sim::RunResult a = sim::run(cfg);
                for (const auto& m : a.periods) {
                    worst = std::max(worst, std::abs(m.accounting_residual));
                }
                if (i % 5 == 0) {
                    const sim::RunResult b = sim::run(cfg);
                    nondeterministic += run_text(a) != run_text(b);
                }
            } catch (const std::exception& e) {
                ++halted;
                if (first_error.empty()) {
                    first_error = "scenario " + std::to_string(i) + ": " + e.what();
                }
            }
        }
    }
    r.seconds = seconds_since(t0);
    r.measured = worst;
    r.expected = 0.0;
    r.tolerance = 1e-9;
    r.passed = halted == 0 && nondeterministic == 0 && worst <= 1e-9;
    r.note = "50 scenarios x 2 fee timings; max relative residual; halted " + std::to_string(halted) +
             ", nondeterministic reruns " + std::to_string(nondeterministic) +
             (first_error.empty() ? "" : "; " + first_error);
    return r;
}

const std::map<std::string, std::vector<int>>& suites()
{
    static const std::map<std::string, std::vector<int>> m{
        {"funding", {1, 2, 3}},  {"fee-band", {4, 5}}, {"surrogate", {6, 7, 8}}, {"delta-bound", {9}},
        {"hedge", {10, 11}},     {"schur", {12}},      {"simulator", {13}}};
    return m;
}

} // namespace

sim::ScenarioConfig smoke_scenario(int index)
{
    Rng rng(1000 + static_cast<std::uint64_t>(index));
    sim::ScenarioConfig c;
    c.name = "smoke_" + std::to_string(index);
    c.horizon = 40;
    c.seed = static_cast<std::uint64_t>(index) * 7 + 1;
    const Eigen::Index n = 2 + index % 2;
    c.numeraire = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        c.asset_names.push_back(i == 0 ? "USD" : "X" + std::to_string(i));
    }

    Vec p0(n);
    p0[0] = 1.0;
    p0[1] = rng.uniform(50.0, 3000.0);
    if (n > 2) {
        p0[2] = rng.uniform(0.5, 50.0);
    }
    c.prices.kind = sim::PriceProcessSpec::Kind::Gbm;
    c.prices.gbm.initial_prices = p0;
    c.prices.gbm.drift = Vec::Zero(n);
    c.prices.gbm.volatility = Vec::Zero(n);
    for (Eigen::Index i = 1; i < n; ++i) {
        c.prices.gbm.drift[i] = rng.uniform(-1e-3, 1e-3);
        c.prices.gbm.volatility[i] = rng.uniform(0.003, 0.02);
    }
    c.prices.gbm.correlation = Mat::Identity(n, n);
    if (n > 2) {
        const double rho = rng.uniform(-0.3, 0.6);
        c.prices.gbm.correlation(1, 2) = rho;
        c.prices.gbm.correlation(2, 1) = rho;
    }

    Vec R(n);
    Vec w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        R[i] = rng.uniform(2e5, 1e6) / p0[i];
        w[i] = rng.uniform(0.2, 1.0);
    }
    w /= w.sum();
    c.pool.reserves = R;
    c.pool.target_weights = w;
    c.pool.fee = rng.uniform(1e-5, 1e-3);
    const double V = p0.dot(R);
    c.pool.shares = V;
    switch (index % 3) {
    case 0:
        c.pool.discount = {{"family", "zero"}};
        break;
    case 1:
        c.pool.discount = {{"family", "gmx"}, {"base", rng.uniform(5e-4, 3e-3)}, {"tax", rng.uniform(5e-3, 3e-2)}};
        break;
    default:
        c.pool.discount = {{"family", "quadratic"}, {"mu", rng.uniform(0.05, 0.2) / (V * V)}};
        break;
    }

    double total_long = 0.0;
    for (Eigen::Index i = 1; i < n; ++i) {
        sim::MarketSpec m;
        m.asset = static_cast<int>(i);
        m.kappa = rng.uniform(0.01, 0.1);
        m.long_oi = rng.uniform(0.02, 0.1) * R[i];
        m.short_oi = rng.uniform(0.02, 0.1) * R[i];
        m.leverage = rng.uniform(1.0, 5.0);
        m.swap_depth = rng.uniform(0.05, 0.2) * V;
        total_long += m.long_oi;
        c.markets.push_back(m);
    }
    c.price_bound = 1.05;
    c.lp_share_fraction = 0.1;

    c.agents.funding_arbitrageur = index % 2 == 0 || index % 5 == 0;
    c.agents.swap_arbitrageur = index % 4 != 3;
    c.agents.twm_arbitrageur = index % 3 != 0;
    c.agents.twm_trade_cap = 0.02;
    c.agents.twm_max_iterations = 100;
    c.agents.twm_min_profit = 1e-6 * V;
    c.agents.hedged_lp = index % 2 == 1;
    c.agents.risk_aversion = 1e-3;
    c.agents.rebalance_costs = Vec::Zero(n);
    for (Eigen::Index i = 1; i < n; ++i) {
        c.agents.rebalance_costs[i] = rng.uniform(0.0, 0.01);
    }
    c.agents.noise_traders = index % 3 == 1;
    c.agents.noise_intensity = 2.0;
    c.agents.noise_mean_size = 0.01 * R[1];
    c.agents.noise_leverage = 3.0;
    if (index % 7 == 0) {
        c.fee_policy.dynamic = true;
        c.fee_policy.theta = c.pool.fee * total_long;
        c.fee_policy.min_fee = 1e-6;
        c.fee_policy.max_fee = 1e-2;
    }
    c.validate();
    return c;
}

nlohmann::json CriterionResult::to_json() const
{
    return {{"id", id},
            {"name", name},
            {"suite", suite},
            {"passed", passed},
            {"measured", measured},
            {"expected", expected},
            {"tolerance", tolerance},
            {"seconds", seconds},
            {"note", note}};
}

const std::vector<std::string>& suite_names()
{
    static const std::vector<std::string> names{"funding", "fee-band", "surrogate", "delta-bound",
                                                "hedge",   "schur",    "simulator"};
    return names;
}

bool is_suite(const std::string& name)
{
    return suites().count(name) > 0;
}

std::vector<int> suite_criteria(const std::string& suite)
{
    const auto it = suites().find(suite);
    if (it == suites().end()) {
        throw InvalidArgumentError("unknown suite '" + suite + "'");
    }
    return it->second;
}

CriterionResult run_criterion(int id, const Options&)
{
    switch (id) {
    case 1: return funding_example();
    case 2: return liquidation_threshold();
    case 3: return arb_size_zero_point();
    case 4: return fee_band_profits();
    case 5: return swap_closed_forms();
    case 6: return surrogate_distance();
    case 7: return surrogate_objective_gap();
    case 8: return solvers_vs_grid();
    case 9: return delta_bound();
    case 10: return hedge_closed_form();
    case 11: return hedge_monte_carlo();
    case 12: return schur_criterion();
    case 13: return simulator_accounting();
    default: throw InvalidArgumentError("no criterion " + std::to_string(id));
    }
}

std::vector<CriterionResult> run_suite(const std::string& suite, const Options& options)
{
    std::vector<CriterionResult> out;
    for (int id : suite_criteria(suite)) {
        out.push_back(run_criterion(id, options));
    }
    return out;
}

std::vector<CriterionResult> run_all(const Options& options)
{
    std::vector<CriterionResult> out;
    for (int id = 1; id <= 13; ++id) {
        out.push_back(run_criterion(id, options));
    }
    return out;
}

std::string format_line(const CriterionResult& r)
{
    std::ostringstream os;
    os << "criterion " << r.id << " [" << r.suite << "] " << r.name << ": " << (r.passed ? "PASS" : "FAIL")
       << " measured=" << std::setprecision(10) << r.measured << " expected=" << r.expected
       << " tol=" << r.tolerance << " (" << std::setprecision(3) << r.seconds << "s)";
    if (!r.note.empty()) {
        os << " " << r.note;
    }
    return os.str();
}

void print_table(std::ostream& os, const std::vector<CriterionResult>& results)
{
    int passed = 0;
    for (const auto& r : results) {
        os << format_line(r) << '\n';
        passed += r.passed;
    }
    os << passed << "/" << results.size() << " criteria passed\n";
}

} // namespace pdlp::verify
