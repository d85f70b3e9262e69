#include "doctest.h"
#include "oracles.hpp"

#include "isa/clime.hpp"

#include <random>

using namespace isa;

TEST_CASE("simplex on small textbook programs") {
    // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), value 36.
    VectorXd c(2);
    c << -3, -5;
    MatrixXd a(3, 2);
    a << 1, 0, 0, 2, 3, 2;
    VectorXd b(3);
    b << 4, 12, 18;
    const lp::Result r = lp::solve(c, a, b);
    REQUIRE(r.status == lp::Status::Optimal);
    CHECK(r.objective == doctest::Approx(-36.0));
    CHECK(r.x(0) == doctest::Approx(2.0));
    CHECK(r.x(1) == doctest::Approx(6.0));

    // Needs phase one: x + y >= 2 written as -x - y <= -2, minimize x + 2y.
    VectorXd c2(2);
    c2 << 1, 2;
    MatrixXd a2(2, 2);
    a2 << -1, -1, 1, 0;
    VectorXd b2(2);
    b2 << -2, 5;
    const lp::Result r2 = lp::solve(c2, a2, b2);
    REQUIRE(r2.status == lp::Status::Optimal);
    CHECK(r2.objective == doctest::Approx(2.0));

    // x <= -1 with x >= 0 is infeasible.
    MatrixXd a3(1, 1);
    a3 << 1;
    VectorXd b3(1);
    b3 << -1;
    CHECK(lp::solve(VectorXd::Ones(1), a3, b3).status == lp::Status::Infeasible);

    // min -x with no upper bound.
    MatrixXd a4(1, 1);
    a4 << -1;
    VectorXd b4(1);
    b4 << 0;
    CHECK(lp::solve(-VectorXd::Ones(1), a4, b4).status == lp::Status::Unbounded);
}

TEST_CASE("CLIME at the identity") {
    const ClimeSolution s = solve_clime_rows(SymmetricMatrix::identity(4), 0.1);
    CHECK(max_norm((s.m - 0.9 * MatrixXd::Identity(4, 4)).eval()) < 1e-12);
    CHECK(oracle::clime_row_value(MatrixXd::Identity(4, 4), 2, 0.1) == doctest::Approx(0.9).epsilon(1e-8));

    const ClimeSolution z = solve_clime_rows(SymmetricMatrix::identity(4), 1.0);
    CHECK(max_norm(z.m) == 0.0);
}

TEST_CASE("CLIME matches an interior-point oracle") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 5; ++trial) {
        const Index d = 5;
        const MatrixXd x = oracle::random_gaussian_rows(200, oracle::random_spd(d, rng), rng);
        const SymmetricMatrix target = SymmetricMatrix::symmetrized(MatrixXd(x.transpose() * x / 200.0));
        const double lam = 0.05;
        const ClimeSolution s = solve_clime_rows(target, lam);
        CHECK(max_norm((s.m * target.dense() - MatrixXd::Identity(d, d)).eval()) <= lam + 1e-8);
        for (Index j = 0; j < d; ++j) {
            CHECK(std::abs(s.m.row(j).lpNorm<1>() - oracle::clime_row_value(target.dense(), j, lam)) < 1e-6);
        }
    }
}

TEST_CASE("masked CLIME is block diagonal") {
    std::mt19937_64 rng(12);
    const GroupPartition p({{0, 2, 4}, {1, 3, 5}});
    const MatrixXd sigma = oracle::random_spd(6, rng);
    const SymmetricMatrix blocked = SymmetricMatrix::symmetrized(block_diagonal(sigma, p));
    const ClimeSolution s = solve_clime_rows(blocked, 0.05, block_mask(p));
    for (const auto& [j, k] : p.cross_pairs()) {
        CHECK(s.m(j, k) == 0.0);
        CHECK(s.m(k, j) == 0.0);
    }
    CHECK(max_norm((s.m * blocked.dense() - MatrixXd::Identity(6, 6)).eval()) <= 0.05 + 1e-8);
}

TEST_CASE("infeasible CLIME rows report a usable lambda'") {
    // A zero row/column makes |e_j| unreachable below 1.
    MatrixXd t = MatrixXd::Identity(3, 3);
    t(2, 2) = 0.0;
    try {
        solve_clime_rows(SymmetricMatrix(t), 0.1);
        FAIL("expected ClimeInfeasible");
    } catch (const ClimeInfeasible& e) {
        CHECK(e.row == 2);
        CHECK(e.suggested_lambda_prime >= 1.0);
        CHECK(std::string(e.what()).find("row 3") != std::string::npos);
        CHECK_NOTHROW(solve_clime_rows(SymmetricMatrix(t), e.suggested_lambda_prime));
    }
    CHECK(clime_min_feasible_lambda(SymmetricMatrix(t), 2) == doctest::Approx(1.0));
    CHECK_THROWS_AS(solve_clime_rows(SymmetricMatrix::identity(3), 0.0), std::invalid_argument);
}
