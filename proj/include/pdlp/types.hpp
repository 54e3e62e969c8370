#pragma once

#include <Eigen/Dense>

#include <initializer_list>

namespace pdlp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

Vec make_vec(std::initializer_list<double> values);

// Strictly positive per-asset prices in numéraire units.
class PriceVector {
public:
    PriceVector() = default;
    explicit PriceVector(Vec p);
    PriceVector(std::initializer_list<double> p);

    const Vec& values() const { return p_; }
    Eigen::Index size() const { return p_.size(); }
    double operator[](Eigen::Index i) const { return p_[i]; }

    // Copy with coordinate i replaced; used by finite-difference price gradients.
    PriceVector with(Eigen::Index i, double value) const;

private:
    Vec p_;
};

} // namespace pdlp
