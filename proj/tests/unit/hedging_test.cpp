#include "pdlp/errors.hpp"
#include "pdlp/hedging.hpp"

#include "gen.hpp"

#include "doctest.h"

#include <cstdio>
#include <fstream>

using namespace pdlp;
using namespace pdlp::hedge;

namespace {

HedgeProblem problem(Mat sigma, Vec loans, Vec delta, double fee, double gamma)
{
    HedgeProblem prob;
    const auto n = sigma.rows();
    prob.fee = fee;
    prob.loans = std::move(loans);
    prob.portfolio_delta = std::move(delta);
    prob.reserves = prob.portfolio_delta;
    prob.current_hedge = Vec::Zero(n);
    prob.rebalance_costs = Vec::Zero(n);
    prob.risk_aversion = gamma;
    prob.covariance = std::move(sigma);
    return prob;
}

class Moments final : public PriceModel {
public:
    Moments(Vec m, Mat c) : m_(std::move(m)), c_(std::move(c)) {}
    Vec mean() const override { return m_; }
    Mat covariance() const override { return c_; }

private:
    Vec m_;
    Mat c_;
};

} // namespace

TEST_CASE("frictionless hedge is fee-scaled inverse covariance minus delta")
{
    const auto prob = problem(Mat::Identity(2, 2), make_vec({1, 1}), make_vec({0.5, 0.5}), 1.0, 1.0);
    CHECK(delta_hedge(prob).isApprox(make_vec({0.5, 0.5})));
    CHECK(frictionless_hedge(prob).isApprox(make_vec({0.5, 0.5})));

    test::Gen gen(41);
    for (int i = 0; i < 200; ++i) {
        const auto n = gen.integer(1, 5);
        const Mat S = gen.spd(n);
        const auto pr = problem(S, gen.vec(n, 0, 10), gen.vec(n, -5, 5), gen.uniform(1e-4, 0.1), gen.uniform(0.01, 2));
        const Vec expected = (pr.fee / pr.risk_aversion) * S.llt().solve(pr.loans) - pr.portfolio_delta;
        CHECK(delta_hedge(pr).isApprox(expected, 1e-9));
    }
}

TEST_CASE("large rebalance costs freeze the hedge")
{
    auto prob = problem(Mat::Identity(2, 2), make_vec({1, 1}), make_vec({0.5, 0.5}), 1.0, 1.0);
    prob.current_hedge = make_vec({3, -2});
    prob.rebalance_costs = Vec::Constant(2, 1e9);
    CHECK((delta_hedge(prob) - prob.current_hedge).norm() <= 1e-6 * prob.current_hedge.norm());
}

TEST_CASE("objective is zero for a perfectly offset hedge without fees")
{
    auto prob = problem(Mat::Identity(2, 2), make_vec({1, 1}), make_vec({-1, 2}), 0.0, 1.0);
    prob.current_hedge = make_vec({1, -2});
    CHECK(objective_value(prob, prob.current_hedge) == 0.0);
}

TEST_CASE("closed-form hedge beats random perturbations and matches gradient ascent")
{
    test::Gen gen(42);
    for (int k = 0; k < 20; ++k) {
        const auto n = gen.integer(2, 4);
        auto prob = problem(gen.spd(n), gen.vec(n, 0, 5), gen.vec(n, -2, 2), gen.uniform(0.01, 0.1), gen.uniform(0.1, 1));
        prob.current_hedge = gen.vec(n, -1, 1);
        prob.rebalance_costs = gen.vec(n, 0, 1);
        const Vec x = delta_hedge(prob);
        const double best = objective_value(prob, x);
        for (int i = 0; i < 50; ++i) {
            CHECK(objective_value(prob, x + gen.vec(n, -1, 1)) <= best + 1e-12);
        }
        CHECK(objective_gradient(prob, x).norm() < 1e-9);

        const Mat H = prob.risk_aversion * prob.covariance + Mat(prob.rebalance_costs.asDiagonal());
        const double step = 1.0 / max_eigenvalue(H);
        Vec y = Vec::Zero(n);
        for (int it = 0; it < 200000 && objective_gradient(prob, y).norm() > 1e-12; ++it) {
            y += step * objective_gradient(prob, y);
        }
        CHECK((y - x).norm() < 1e-8);
    }
}

TEST_CASE("condition one fails without fee revenue")
{
    const auto prob = problem(Mat::Identity(2, 2), make_vec({0, 0}), make_vec({1, 1}), 0.01, 1.0);
    const auto rep = sharpe_conditions(prob, Moments(make_vec({1, 1}), Mat::Identity(2, 2)));
    CHECK_FALSE(rep.condition1);
}

TEST_CASE("condition one holds with a margin factor of two")
{
    const double s2 = 0.04;
    const double gamma = 0.5;
    const Vec ell = make_vec({2, 1});
    const Vec delta = make_vec({1, 1});
    const Vec mean = make_vec({1, 1});
    const double f = 2 * gamma * s2 * mean.dot(delta) / mean.dot(ell);
    const auto prob = problem(s2 * Mat::Identity(2, 2), ell, delta, f, gamma);
    const auto rep = sharpe_conditions(prob, Moments(mean, s2 * Mat::Identity(2, 2)));
    CHECK(rep.lambda_max == doctest::Approx(s2));
    CHECK(rep.fee_revenue == doctest::Approx(2 * rep.risk_charge));
    CHECK(rep.condition1);
}

TEST_CASE("Schur complements")
{
    const Mat S = (Mat(2, 2) << 2, 1, 1, 2).finished();
    const auto sc = schur_complements(PoolPartition::split(S, {0}));
    CHECK(sc.over_A(0, 0) == doctest::Approx(1.5));
    CHECK(sc.over_C(0, 0) == doctest::Approx(1.5));

    test::Gen gen(43);
    const Mat A = gen.spd(2);
    const Mat C = gen.spd(3);
    Mat block = Mat::Zero(5, 5);
    block.topLeftCorner(2, 2) = A;
    block.bottomRightCorner(3, 3) = C;
    const auto part = PoolPartition::split(block, {0, 1});
    const auto bd = schur_complements(part);
    CHECK(bd.over_A.isApprox(A));
    CHECK(bd.over_C.isApprox(C));
}

TEST_CASE("single pool report is not applicable for block-diagonal covariance")
{
    test::Gen gen(44);
    Mat block = Mat::Zero(4, 4);
    block.topLeftCorner(2, 2) = gen.spd(2);
    block.bottomRightCorner(2, 2) = gen.spd(2);
    const auto rep = single_pool_better(PoolPartition::split(block, {0, 1}));
    CHECK_FALSE(rep.applicable);
    CHECK(rep.note.find("not applicable") != std::string::npos);
}

TEST_CASE("single pool report on scalar blocks computes the complement")
{
    const Mat S = (Mat(2, 2) << 1, 0.9, 0.9, 1).finished();
    const auto rep = single_pool_better(PoolPartition::split(S, {0}));
    CHECK(rep.sigma_min_schur_A == doctest::Approx(0.19));
    CHECK(rep.sigma_max_A == doctest::Approx(1.0));
    CHECK_FALSE(rep.hypothesis_A);
    CHECK_FALSE(rep.applicable);
}

TEST_CASE("partition validation")
{
    CHECK_THROWS(PoolPartition::split(Mat::Identity(3, 3), {0, 0}).validate());
    CHECK_THROWS(PoolPartition::split(Mat::Identity(3, 3), {5}).validate());
}

TEST_CASE("GBM price model moments")
{
    const GbmPriceModel m(PriceVector{1, 2}, make_vec({0, 0.01}), make_vec({0, 0.1}), Mat::Identity(2, 2));
    CHECK(m.mean()[1] == doctest::Approx(2 * std::exp(0.01)));
    CHECK(m.covariance()(1, 1) == doctest::Approx(4 * std::exp(0.02) * (std::exp(0.01) - 1)));
    CHECK(m.covariance()(0, 0) == 0.0);
}

TEST_CASE("covariance CSV loads with a header row")
{
    const std::string path = "hedging_test_cov.csv";
    std::ofstream(path) << "a,b\n1,0.5\n0.5,2\n";
    std::vector<std::string> names;
    const Mat S = load_covariance_csv(path, &names);
    CHECK(names == std::vector<std::string>{"a", "b"});
    CHECK(S(1, 1) == 2.0);
    std::ofstream(path) << "a,b\n1,0.5\n0.4,2\n";
    CHECK_THROWS(load_covariance_csv(path));
    std::remove(path.c_str());
}
