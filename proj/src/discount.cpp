#include "pdlp/discount.hpp"

#include "pdlp/errors.hpp"
#include "pdlp/pool.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <random>

namespace pdlp::twm {

namespace {

double fd_step_for(const Vec& R)
{
    const double n = R.norm();
    return n > 0.0 ? 1e-6 * n : 1e-6;
}

} // namespace

DiscountFn::DiscountFn(std::string name, EvalFn eval, double mu, std::optional<double> gradient_bound)
    : name_(std::move(name)), eval_(std::move(eval)), mu_(mu), gradient_bound_(gradient_bound)
{
    if (mu_ < 0.0) {
        throw InvalidArgumentError("strong concavity parameter must be nonnegative");
    }
}

double DiscountFn::evaluate(const PriceVector& p, const Vec& target, const Vec& R, const Vec& delta) const
{
    if (!eval_) {
        throw BlackBoxFailure("discount function '" + name_ + "' has no evaluator");
    }
    const double v = eval_(p, target, R, delta);
    if (!std::isfinite(v)) {
        throw BlackBoxFailure("discount function '" + name_ + "' returned a non-finite value");
    }
    return v;
}

Vec DiscountFn::gradient(const PriceVector& p, const Vec& target, const Vec& R, const Vec& delta) const
{
    if (grad_) {
        return grad_(p, target, R, delta);
    }
    const double h = fd_step_for(R);
    Vec g(delta.size());
    Vec probe = delta;
    for (Eigen::Index i = 0; i < delta.size(); ++i) {
        probe[i] = delta[i] + h;
        const double up = evaluate(p, target, R, probe);
        probe[i] = delta[i] - h;
        const double down = evaluate(p, target, R, probe);
        probe[i] = delta[i];
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

Vec DiscountFn::subgradient_at_zero(const PriceVector& p, const Vec& target, const Vec& R) const
{
    const Vec zero = Vec::Zero(R.size());
    if (grad_) {
        return grad_(p, target, R, zero);
    }
    const double h = fd_step_for(R);
    const double f0 = evaluate(p, target, R, zero);
    Vec g(R.size());
    Vec probe = zero;
    for (Eigen::Index i = 0; i < R.size(); ++i) {
        probe[i] = h;
        const double forward = (evaluate(p, target, R, probe) - f0) / h;
        probe[i] = -h;
        const double backward = (f0 - evaluate(p, target, R, probe)) / h;
        probe[i] = 0.0;
        g[i] = 0.5 * (forward + backward);
    }
    return g;
}

Vec DiscountFn::price_gradient(const PriceVector& p, const Vec& target, const Vec& R, const Vec& delta) const
{
    if (price_grad_) {
        return price_grad_(p, target, R, delta);
    }
    Vec g(p.size());
    for (Eigen::Index j = 0; j < p.size(); ++j) {
        const double h = 1e-6 * p[j];
        const double up = evaluate(p.with(j, p[j] + h), target, R, delta);
        const double down = evaluate(p.with(j, p[j] - h), target, R, delta);
        g[j] = (up - down) / (2.0 * h);
    }
    return g;
}

DiscountFn& DiscountFn::set_gradient(GradFn g)
{
    grad_ = std::move(g);
    return *this;
}

DiscountFn& DiscountFn::set_price_gradient(GradFn g)
{
    price_grad_ = std::move(g);
    return *this;
}

DiscountFn& DiscountFn::set_mu(double mu)
{
    if (mu < 0.0) {
        throw InvalidArgumentError("strong concavity parameter must be nonnegative");
    }
    mu_ = mu;
    return *this;
}

DiscountFn& DiscountFn::set_gradient_bound(std::optional<double> G)
{
    gradient_bound_ = G;
    return *this;
}

void GmxParams::validate() const
{
    if (!(base > 0.0 && base < 1.0)) {
        throw InvalidArgumentError("GMX base scalar must lie in (0,1)");
    }
    if (!(tax > 0.0 && tax < 1.0)) {
        throw InvalidArgumentError("GMX tax scalar must lie in (0,1)");
    }
}

double gmx_discount(const PriceVector& p, const Vec& target, const Vec& R, const Vec& delta, const GmxParams& params)
{
    const Vec after = R + delta;
    if ((after.array() < 0.0).any()) {
        throw InvalidArgumentError("GMX discount needs R + δ >= 0");
    }
    const Vec wb = pool::weights(p, R);
    const Vec wa = pool::weights(p, after);
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < R.size(); ++i) {
        double G = 0.0;
        if (wa[i] != wb[i]) {
            const double dev_b = std::abs(wb[i] - target[i]);
            const double dev_a = std::abs(wa[i] - target[i]);
            if (target[i] == 0.0) {
                throw DegenerateTarget("target weight " + std::to_string(i) + " is zero");
            }
            if (dev_a < dev_b) {
                G = params.tax * dev_b / target[i];
            } else {
                G = -0.5 * params.tax * (dev_b / target[i] + dev_a / target[i]);
            }
        }
        best = std::max(best, G);
    }
    return std::max(0.0, params.base + best);
}

DiscountFn make_gmx(const GmxParams& params)
{
    params.validate();
    return DiscountFn("gmx", [params](const PriceVector& p, const Vec& w, const Vec& R, const Vec& d) {
        return gmx_discount(p, w, R, d, params);
    });
}

DiscountFn make_zero()
{
    DiscountFn fn("zero", [](const PriceVector&, const Vec&, const Vec&, const Vec&) { return 0.0; });
    fn.set_gradient([](const PriceVector&, const Vec&, const Vec&, const Vec& d) { return Vec(Vec::Zero(d.size())); });
    fn.set_price_gradient(
        [](const PriceVector& p, const Vec&, const Vec&, const Vec&) { return Vec(Vec::Zero(p.size())); });
    return fn;
}

DiscountFn make_constant(double value)
{
    DiscountFn fn("constant", [value](const PriceVector&, const Vec&, const Vec&, const Vec&) { return value; });
    fn.set_gradient([](const PriceVector&, const Vec&, const Vec&, const Vec& d) { return Vec(Vec::Zero(d.size())); });
    fn.set_price_gradient(
        [](const PriceVector& p, const Vec&, const Vec&, const Vec&) { return Vec(Vec::Zero(p.size())); });
    return fn;
}

DiscountFn recentered(const DiscountFn& raw)
{
    DiscountFn fn(
        raw.name() + "-recentered",
        [raw](const PriceVector& p, const Vec& w, const Vec& R, const Vec& d) {
            return raw.evaluate(p, w, R, d) - raw.evaluate(p, w, R, Vec::Zero(d.size()));
        },
        raw.mu(), raw.gradient_bound());
    if (raw.has_gradient()) {
        fn.set_gradient([raw](const PriceVector& p, const Vec& w, const Vec& R, const Vec& d) {
            return raw.gradient(p, w, R, d);
        });
    }
    return fn;
}

DiscountFn make_linear_quadratic(Vec g, double mu, std::optional<double> gradient_bound)
{
    DiscountFn fn(
        "linear-quadratic",
        [g, mu](const PriceVector&, const Vec&, const Vec&, const Vec& d) {
            return g.dot(d) - 0.5 * mu * d.squaredNorm();
        },
        mu, gradient_bound);
    fn.set_gradient([g, mu](const PriceVector&, const Vec&, const Vec&, const Vec& d) { return Vec(g - mu * d); });
    fn.set_price_gradient(
        [](const PriceVector& p, const Vec&, const Vec&, const Vec&) { return Vec(Vec::Zero(p.size())); });
    return fn;
}

Vec target_trade(const PriceVector& p, const Vec& target, const Vec& R)
{
    // R + d must be proportional to v = w* ⊘ p; the closest such point to R
    // is the projection of R onto span(v).
    const Vec v = target.array() / p.values().array();
    const double vv = v.squaredNorm();
    if (vv == 0.0) {
        throw DegenerateTarget("target weights are all zero");
    }
    return (v.dot(R) / vv) * v - R;
}

DiscountFn make_target_quadratic(double mu)
{
    if (!(mu > 0.0)) {
        throw InvalidArgumentError("quadratic discount needs mu > 0");
    }
    DiscountFn fn(
        "quadratic",
        [mu](const PriceVector& p, const Vec& w, const Vec& R, const Vec& d) {
            const Vec t = target_trade(p, w, R);
            return -0.5 * mu * (d - t).squaredNorm() + 0.5 * mu * t.squaredNorm();
        },
        mu);
    fn.set_gradient([mu](const PriceVector& p, const Vec& w, const Vec& R, const Vec& d) {
        return Vec(-mu * (d - target_trade(p, w, R)));
    });
    return fn;
}

DiscountFn make_table(std::vector<AffinePiece> pieces, double mu)
{
    if (pieces.empty()) {
        throw InvalidArgumentError("custom-table discount needs at least one piece");
    }
    if (mu < 0.0) {
        throw InvalidArgumentError("custom-table mu must be nonnegative");
    }
    const auto dim = pieces.front().slope.size();
    double offset = std::numeric_limits<double>::infinity();
    double lipschitz = 0.0;
    for (const auto& piece : pieces) {
        if (piece.slope.size() != dim) {
            throw InvalidArgumentError("custom-table pieces must share one dimension");
        }
        offset = std::min(offset, piece.intercept);
        lipschitz = std::max(lipschitz, piece.slope.norm());
    }
    auto active = [pieces](const Vec& d) {
        std::size_t best = 0;
        double value = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < pieces.size(); ++k) {
            const double v = pieces[k].intercept + pieces[k].slope.dot(d);
            if (v < value) {
                value = v;
                best = k;
            }
        }
        return std::pair{best, value};
    };
    DiscountFn fn(
        "custom-table",
        [active, offset, mu, dim](const PriceVector&, const Vec&, const Vec&, const Vec& d) {
            if (d.size() != dim) {
                throw InvalidArgumentError("custom-table dimension mismatch");
            }
            return active(d).second - offset - 0.5 * mu * d.squaredNorm();
        },
        mu);
    fn.set_gradient([active, pieces, mu](const PriceVector&, const Vec&, const Vec&, const Vec& d) {
        return Vec(pieces[active(d).first].slope - mu * d);
    });
    fn.set_price_gradient(
        [](const PriceVector& p, const Vec&, const Vec&, const Vec&) { return Vec(Vec::Zero(p.size())); });
    if (mu == 0.0) {
        fn.set_gradient_bound(lipschitz * lipschitz);
    }
    return fn;
}

namespace {

struct Box {
    Vec lower;
    Vec upper;

    Vec project(const Vec& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
};

Box smoothing_box(const PriceVector& p, const Vec& R, const SmoothingOptions& o)
{
    const double value = p.values().dot(R);
    Box box;
    box.lower = -o.withdraw_fraction * R;
    box.upper = (o.deposit_fraction * value) / p.values().array();
    return box;
}

double weight_error(const PriceVector& p, const Vec& target, const Vec& R, const Vec& d)
{
    return (pool::weights(p, R + d) - target).lpNorm<1>();
}

std::optional<double> try_eval(const DiscountFn& raw, const PriceVector& p, const Vec& w, const Vec& R, const Vec& d)
{
    try {
        return raw.evaluate(p, w, R, d);
    } catch (const Error&) {
        return std::nullopt;
    }
}

} // namespace

SmoothingAnchor find_anchor(const DiscountFn& raw, const PriceVector& p, const Vec& target, const Vec& R,
                            const SmoothingOptions& options)
{
    const auto n = R.size();
    const Box box = smoothing_box(p, R, options);

    std::vector<Vec> samples;
    samples.emplace_back(Vec::Zero(n));
    if (n <= 3) {
        const int m = std::max(2, options.lattice_points);
        std::vector<int> idx(static_cast<std::size_t>(n), 0);
        while (true) {
            Vec x(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                const double t = static_cast<double>(idx[static_cast<std::size_t>(i)]) / (m - 1);
                x[i] = box.lower[i] + t * (box.upper[i] - box.lower[i]);
            }
            samples.push_back(std::move(x));
            Eigen::Index k = 0;
            while (k < n && ++idx[static_cast<std::size_t>(k)] == m) {
                idx[static_cast<std::size_t>(k)] = 0;
                ++k;
            }
            if (k == n) {
                break;
            }
        }
    } else {
        std::mt19937_64 rng(options.seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int s = 0; s < options.random_samples; ++s) {
            Vec x(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                x[i] = box.lower[i] + unit(rng) * (box.upper[i] - box.lower[i]);
            }
            samples.push_back(std::move(x));
        }
    }

    double best_value = -std::numeric_limits<double>::infinity();
    for (const auto& x : samples) {
        if (auto v = try_eval(raw, p, target, R, x)) {
            best_value = std::max(best_value, *v);
        }
    }
    if (!std::isfinite(best_value)) {
        throw SmoothingFailure("discount '" + raw.name() + "' could not be evaluated anywhere on the smoothing box");
    }
    const double tie = 1e-12 * (1.0 + std::abs(best_value));

    // The trade that hits the target exactly is preferred whenever it attains
    // the sampled maximum.
    std::optional<Vec> preferred;
    try {
        Vec d = box.project(target_trade(p, target, R));
        if (auto v = try_eval(raw, p, target, R, d); v && *v >= best_value - tie) {
            preferred = std::move(d);
        }
    } catch (const Error&) {
    }

    SmoothingAnchor anchor;
    if (preferred) {
        anchor.point = *preferred;
        anchor.value = raw.evaluate(p, target, R, anchor.point);
        return anchor;
    }

    const Vec* chosen = nullptr;
    double chosen_err = 0.0;
    for (const auto& x : samples) {
        auto v = try_eval(raw, p, target, R, x);
        if (!v || *v < best_value - tie) {
            continue;
        }
        const double err = weight_error(p, target, R, x);
        if (chosen == nullptr || err < chosen_err - 1e-12 ||
            (std::abs(err - chosen_err) <= 1e-12 && x.norm() < chosen->norm())) {
            chosen = &x;
            chosen_err = err;
        }
    }
    Vec x = *chosen;
    double fx = raw.evaluate(p, target, R, x);

    // Projected gradient refinement with backtracking.
    double step = 0.1 * (box.upper - box.lower).maxCoeff();
    bool converged = false;
    for (int it = 0; it < options.max_iterations; ++it) {
        Vec g;
        try {
            g = raw.gradient(p, target, R, x);
        } catch (const Error&) {
            converged = true;
            break;
        }
        if (g.norm() == 0.0) {
            anchor.trace.objective.push_back(fx);
            anchor.trace.step_norm.push_back(0.0);
            converged = true;
            break;
        }
        double moved = 0.0;
        bool improved = false;
        double t = step / g.norm();
        for (int ls = 0; ls < 60; ++ls) {
            const Vec y = box.project(x + t * g);
            moved = (y - x).norm();
            if (moved < options.step_tolerance) {
                break;
            }
            auto fy = try_eval(raw, p, target, R, y);
            if (fy && *fy > fx) {
                x = y;
                fx = *fy;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        anchor.trace.objective.push_back(fx);
        anchor.trace.step_norm.push_back(improved ? moved : 0.0);
        if (!improved || moved < options.step_tolerance) {
            converged = true;
            break;
        }
        step = std::min(2.0 * t * g.norm(), (box.upper - box.lower).maxCoeff());
    }
    if (!converged) {
        SmoothingFailure err("smoothing of '" + raw.name() + "' did not converge in " +
                             std::to_string(options.max_iterations) + " iterations; last step norm " +
                             std::to_string(anchor.trace.step_norm.empty() ? 0.0 : anchor.trace.step_norm.back()));
        throw err;
    }
    anchor.point = std::move(x);
    anchor.value = fx;
    return anchor;
}

namespace {

// Anchors keyed by context; contexts repeat across the many evaluations a
// solver makes, so the search runs once per (p, w*, R).
class AnchorCache {
public:
    AnchorCache(DiscountFn raw, SmoothingOptions options) : raw_(std::move(raw)), options_(options) {}

    SmoothingAnchor get(const PriceVector& p, const Vec& w, const Vec& R)
    {
        std::vector<double> key;
        key.reserve(static_cast<std::size_t>(p.size() + w.size() + R.size()));
        key.insert(key.end(), p.values().data(), p.values().data() + p.size());
        key.insert(key.end(), w.data(), w.data() + w.size());
        key.insert(key.end(), R.data(), R.data() + R.size());
        {
            std::lock_guard lock(mutex_);
            if (auto it = cache_.find(key); it != cache_.end()) {
                return it->second;
            }
        }
        SmoothingAnchor anchor = find_anchor(raw_, p, w, R, options_);
        std::lock_guard lock(mutex_);
        if (cache_.size() >= 256) {
            cache_.clear();
        }
        cache_.emplace(std::move(key), anchor);
        return anchor;
    }

private:
    DiscountFn raw_;
    SmoothingOptions options_;
    std::mutex mutex_;
    std::map<std::vector<double>, SmoothingAnchor> cache_;
};

} // namespace

DiscountFn smooth_discount(const DiscountFn& raw, double mu, const SmoothingOptions& options)
{
    if (!(mu > 0.0)) {
        throw InvalidArgumentError("smoothing needs mu > 0");
    }
    auto cache = std::make_shared<AnchorCache>(raw, options);
    DiscountFn fn(
        raw.name() + "-smoothed",
        [cache, mu](const PriceVector& p, const Vec& w, const Vec& R, const Vec& d) {
            const SmoothingAnchor a = cache->get(p, w, R);
            return a.value - 0.5 * mu * (d - a.point).squaredNorm();
        },
        mu);
    fn.set_gradient([cache, mu](const PriceVector& p, const Vec& w, const Vec& R, const Vec& d) {
        return Vec(-mu * (d - cache->get(p, w, R).point));
    });
    return fn;
}

DiscountFn make_smoothed_gmx(const GmxParams& params, double mu, const SmoothingOptions& options)
{
    return recentered(smooth_discount(recentered(make_gmx(params)), mu, options));
}

double default_gmx_mu(const GmxParams& params, const PriceVector& p, const Vec& R)
{
    const double value = p.values().dot(R);
    if (!(value > 0.0)) {
        throw UndefinedWeights("pool value must be positive");
    }
    return params.tax / (value * value);
}

double Surrogate::value(const Vec& delta) const
{
    return g.dot(delta) - 0.5 * mu * delta.squaredNorm();
}

Surrogate surrogate(const DiscountFn& fn, const PriceVector& p, const Vec& target, const Vec& R)
{
    if (!(fn.mu() > 0.0)) {
        throw SurrogateUnavailable("discount '" + fn.name() + "' has no strong concavity parameter");
    }
    Surrogate s;
    s.mu = fn.mu();
    s.g = fn.subgradient_at_zero(p, target, R);
    s.delta_h = s.g / s.mu;
    return s;
}

GapBounds gap_bounds(double G, double mu, const PriceVector* p)
{
    if (!(mu > 0.0)) {
        throw BoundsUnavailable("bounds need mu > 0");
    }
    if (!(G >= 0.0)) {
        throw BoundsUnavailable("gradient bound must be nonnegative");
    }
    GapBounds b;
    b.fh = 2.0 * G / mu;
    b.fh_unconstrained = std::sqrt(G) / mu;
    b.sh = 4.0 * G / mu;
    if (p != nullptr) {
        const double C = p->values().minCoeff();
        b.objective = (40.0 + 8.0 / C) * p->values().norm() * G * G * G / (mu * mu);
    }
    return b;
}

GapBounds surrogate_gap_bounds(const DiscountFn& fn, const PriceVector* p)
{
    if (!fn.gradient_bound()) {
        throw BoundsUnavailable("discount '" + fn.name() + "' has no gradient bound");
    }
    return gap_bounds(*fn.gradient_bound(), fn.mu(), p);
}

namespace {

Vec vec_from_json(const nlohmann::json& j, const char* what)
{
    if (!j.is_array()) {
        throw ConfigError(std::string(what) + " must be a list of numbers");
    }
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) {
            throw ConfigError(std::string(what) + " must be a list of numbers");
        }
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

double number_or(const nlohmann::json& j, const char* key, double fallback)
{
    if (!j.contains(key)) {
        return fallback;
    }
    if (!j.at(key).is_number()) {
        throw ConfigError(std::string("discount.") + key + " must be a number");
    }
    return j.at(key).get<double>();
}

} // namespace

DiscountFn discount_from_config(const nlohmann::json& stanza, const PriceVector& p0, const Vec& R0)
{
    if (!stanza.is_object() || !stanza.contains("family") || !stanza.at("family").is_string()) {
        throw ConfigError("discount stanza needs a 'family' string");
    }
    const std::string family = stanza.at("family").get<std::string>();
    try {
        if (family == "zero" || family == "none") {
            return make_zero();
        }
        if (family == "gmx") {
            GmxParams params{number_or(stanza, "base", 0.001), number_or(stanza, "tax", 0.01)};
            params.validate();
            double mu = default_gmx_mu(params, p0, R0) * number_or(stanza, "mu_scale", 1.0);
            if (stanza.contains("mu")) {
                mu = number_or(stanza, "mu", mu);
            }
            if (stanza.value("smoothed", true)) {
                return make_smoothed_gmx(params, mu);
            }
            return recentered(make_gmx(params));
        }
        if (family == "quadratic") {
            const double mu = number_or(stanza, "mu", 0.0);
            if (stanza.contains("linear")) {
                return make_linear_quadratic(vec_from_json(stanza.at("linear"), "discount.linear"), mu);
            }
            return make_target_quadratic(mu);
        }
        if (family == "custom-table") {
            if (!stanza.contains("pieces") || !stanza.at("pieces").is_array()) {
                throw ConfigError("custom-table discount needs a 'pieces' list");
            }
            std::vector<AffinePiece> pieces;
            for (const auto& piece : stanza.at("pieces")) {
                pieces.push_back({number_or(piece, "intercept", 0.0),
                                  vec_from_json(piece.value("slope", nlohmann::json::array()), "piece.slope")});
            }
            return make_table(std::move(pieces), number_or(stanza, "mu", 0.0));
        }
    } catch (const InvalidArgumentError& e) {
        throw ConfigError(std::string("discount: ") + e.what());
    }
    throw ConfigError("unknown discount family '" + family + "'");
}

} // namespace pdlp::twm
