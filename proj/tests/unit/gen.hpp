#pragma once

#include "pdlp/types.hpp"

#include <cstdint>
#include <random>

namespace pdlp::test {

// Small deterministic generator for property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool coin() { return integer(0, 1) == 1; }

    Vec vec(Eigen::Index n, double lo, double hi)
    {
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            v[i] = uniform(lo, hi);
        }
        return v;
    }

    // Σ = QᵀQ + εI with entries of Q in [-1, 1].
    Mat spd(Eigen::Index n, double eps = 0.1)
    {
        Mat q(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                q(i, j) = uniform(-1.0, 1.0);
            }
        }
        return q.transpose() * q + eps * Mat::Identity(n, n);
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

} // namespace pdlp::test
