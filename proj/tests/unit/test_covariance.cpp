#include "doctest.h"
#include "oracles.hpp"

#include "isa/covariance.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace isa;

TEST_CASE("sample covariance") {
    MatrixXd x(2, 2);
    x << 1, 0, -1, 0;
    MatrixXd expect(2, 2);
    expect << 1, 0, 0, 0;
    CHECK(sample_covariance(x, false).dense() == expect);

    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    MatrixXd y(3, 2);
    for (Index i = 0; i < 3; ++i) {
        for (Index j = 0; j < 2; ++j) y(i, j) = nd(rng);
    }
    const SymmetricMatrix s = sample_covariance(y, false);
    for (Index j = 0; j < 2; ++j) {
        for (Index k = 0; k < 2; ++k) {
            double acc = 0.0;
            for (Index i = 0; i < 3; ++i) acc += y(i, j) * y(i, k);
            CHECK(std::abs(s(j, k) - acc / 3.0) < 1e-12);
        }
    }

    MatrixXd z = y;
    z.col(1).setConstant(4.0);
    const SymmetricMatrix c = sample_covariance(z, true);
    CHECK(c(1, 1) == 0.0);
    CHECK(c(0, 1) == 0.0);

    CHECK_THROWS_AS(sample_covariance(MatrixXd::Ones(1, 3), false), DimensionError);
}

TEST_CASE("blocked covariance perturbation") {
    const GroupPartition p = GroupPartition::contiguous({2, 2});
    std::mt19937_64 rng(2);

    SUBCASE("well conditioned is a no-op") {
        const MatrixXd sigma = oracle::random_spd(4, rng);
        const MatrixXd x = oracle::random_gaussian_rows(5000, sigma, rng);
        const CovariancePair c = blocked_covariance(sample_covariance(x, false), p, 5000);
        CHECK_FALSE(c.perturbation_applied);
        CHECK(c.epsilon == 0.0);
        CHECK(c.blocked.dense() == block_diagonal(c.full.dense(), p));
    }

    SUBCASE("rank deficient blocks get sqrt(log d / n)") {
        const GroupPartition q = GroupPartition::contiguous({5, 5});
        const MatrixXd x = oracle::random_gaussian_rows(3, MatrixXd::Identity(10, 10), rng);
        const CovariancePair c = blocked_covariance(sample_covariance(x, false), q, 3);
        CHECK(c.perturbation_applied);
        CHECK(c.epsilon == doctest::Approx(std::sqrt(std::log(10.0) / 3.0)));
        const double lo = Eigen::SelfAdjointEigenSolver<MatrixXd>(c.blocked.dense()).eigenvalues()(0);
        CHECK(lo >= c.epsilon - 1e-10);
    }

    SUBCASE("eigenvalues shift by epsilon") {
        MatrixXd x(2, 4);
        x << 1, 2, 0.5, -1, 1, 2, -0.5, 1;
        const CovariancePair c = blocked_covariance(sample_covariance(x, false), p, 2);
        REQUIRE(c.perturbation_applied);
        const MatrixXd raw = block_diagonal(c.full.dense(), p);
        const VectorXd before = Eigen::SelfAdjointEigenSolver<MatrixXd>(raw).eigenvalues();
        const VectorXd after = Eigen::SelfAdjointEigenSolver<MatrixXd>(c.blocked.dense()).eigenvalues();
        CHECK(max_norm((after - before.array().matrix() - VectorXd::Constant(4, c.epsilon)).eval()) < 1e-12);
    }
}

TEST_CASE("kendall covariance") {
    MatrixXd x(5, 2);
    x << 1, 10, 2, 20, 3, 30, 4, 40, 5, 50;
    CHECK(kendall_covariance(x)(0, 1) == doctest::Approx(1.0));
    x.col(1) = -x.col(1);
    CHECK(kendall_covariance(x)(0, 1) == doctest::Approx(-1.0));

    std::mt19937_64 rng(9);
    std::normal_distribution<double> nd;
    MatrixXd y(6, 3);
    for (Index i = 0; i < 6; ++i) {
        for (Index j = 0; j < 3; ++j) y(i, j) = nd(rng);
    }
    const MatrixXd expect = oracle::kendall_pairs(y);
    const SymmetricMatrix loop = kendall_covariance(y, KendallMethod::PairLoop);
    const SymmetricMatrix fast = kendall_covariance(y, KendallMethod::MergeSort);
    CHECK(max_norm((loop.dense() - expect).eval()) < 1e-15);
    CHECK(loop == fast);
}

TEST_CASE("merge-sort sign sum agrees with the pair loop, ties included") {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> small(0, 3);
    for (int trial = 0; trial < 200; ++trial) {
        const Index n = 2 + trial % 40;
        VectorXd a(n), b(n);
        for (Index i = 0; i < n; ++i) {
            a(i) = small(rng);
            b(i) = small(rng);
        }
        CHECK(kendall_sign_sum(a, b, KendallMethod::MergeSort) == kendall_sign_sum(a, b, KendallMethod::PairLoop));
    }
}

TEST_CASE("kendall recovers gaussian correlation") {
    std::mt19937_64 rng(17);
    MatrixXd sigma(2, 2);
    sigma << 1, 0.5, 0.5, 1;
    const Index n = 4000;
    const MatrixXd x = oracle::random_gaussian_rows(n, sigma, rng);
    const double r = kendall_covariance(x, KendallMethod::MergeSort)(0, 1);
    // tau = 1/3 here; its standard error is about sqrt(4/(9n)) scaled by the
    // sine's slope, well under 0.02.
    CHECK(std::abs(r - 0.5) < 3.0 * 0.02);

    // Invariance under monotone marginal transforms.
    const MatrixXd cubed = x.array().cube();
    CHECK(kendall_covariance(cubed, KendallMethod::MergeSort) == kendall_covariance(x, KendallMethod::MergeSort));
}
