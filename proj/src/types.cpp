#include "pdlp/types.hpp"

#include "pdlp/errors.hpp"

#include <cmath>
#include <string>

namespace pdlp {

Vec make_vec(std::initializer_list<double> values)
{
    Vec v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) {
        v[i++] = x;
    }
    return v;
}

PriceVector::PriceVector(Vec p) : p_(std::move(p))
{
    for (Eigen::Index i = 0; i < p_.size(); ++i) {
        if (!(p_[i] > 0.0) || !std::isfinite(p_[i])) {
            throw InvalidArgumentError("price " + std::to_string(i) + " must be finite and > 0, got " +
                                       std::to_string(p_[i]));
        }
    }
}

PriceVector::PriceVector(std::initializer_list<double> p) : PriceVector(make_vec(p)) {}

PriceVector PriceVector::with(Eigen::Index i, double value) const
{
    Vec q = p_;
    q[i] = value;
    return PriceVector(std::move(q));
}

} // namespace pdlp
