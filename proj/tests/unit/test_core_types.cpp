#include "doctest.h"
#include "oracles.hpp"

#include "isa/core_types.hpp"

#include <random>

using namespace isa;

TEST_CASE("symmetric matrix construction") {
    MatrixXd a(2, 2);
    a << 1, 2, 2, 3;
    const SymmetricMatrix s(a);
    CHECK(s.dim() == 2);
    CHECK(s(0, 1) == 2.0);

    MatrixXd bad(2, 2);
    bad << 1, 2, 2.1, 3;
    CHECK_THROWS_AS(SymmetricMatrix{bad}, std::invalid_argument);
    CHECK_THROWS_AS(SymmetricMatrix{MatrixXd(2, 3)}, DimensionError);

    MatrixXd nan = a;
    nan(0, 0) = std::nan("");
    CHECK_THROWS_AS(SymmetricMatrix{nan}, std::invalid_argument);

    // Tiny asymmetry is averaged away.
    MatrixXd near = a;
    near(0, 1) += 1e-9;
    const SymmetricMatrix t(near);
    CHECK(t(0, 1) == t(1, 0));

    const SymmetricMatrix u = SymmetricMatrix::symmetrized(bad);
    CHECK(u(0, 1) == doctest::Approx(2.05));
}

TEST_CASE("group partition validation") {
    CHECK_NOTHROW(GroupPartition({{0, 1}, {2, 3}}));
    CHECK_THROWS_AS(GroupPartition({{0, 1, 2, 3}}), std::invalid_argument);
    CHECK_THROWS_AS(GroupPartition({{0, 1}, {1, 2}}), std::invalid_argument);
    CHECK_THROWS_AS(GroupPartition({{0, 1}, {3}}), std::invalid_argument);
    CHECK_THROWS_AS(GroupPartition({{0, 1}, {}}), std::invalid_argument);

    const GroupPartition p = GroupPartition::equal(7, 3);
    CHECK(p.group(0).size() == 3);
    CHECK(p.group(1).size() == 2);
    CHECK(p.group(2).size() == 2);
    CHECK(p.group_of(3) == 1);
    CHECK(p.same_group(5, 6));

    const GroupPartition q = GroupPartition::contiguous({2, 2});
    const auto pairs = q.cross_pairs();
    REQUIRE(pairs.size() == 4);
    CHECK(pairs.front() == std::make_pair(Index{0}, Index{2}));
    CHECK(pairs.back() == std::make_pair(Index{1}, Index{3}));

    // Non-contiguous groups are allowed.
    const GroupPartition r({{0, 2}, {1, 3}});
    CHECK(r.group_of(2) == 0);
    CHECK(InterBlockIndex::make(0, 1, r).col_group == 1);
}

TEST_CASE("block diagonal extraction") {
    const GroupPartition p = GroupPartition::contiguous({2, 2});
    CHECK(block_diagonal(MatrixXd::Identity(4, 4), p) == MatrixXd::Identity(4, 4));

    const MatrixXd ones = MatrixXd::Ones(4, 4);
    MatrixXd expect = MatrixXd::Zero(4, 4);
    expect.topLeftCorner(2, 2).setOnes();
    expect.bottomRightCorner(2, 2).setOnes();
    CHECK(block_diagonal(ones, p) == expect);

    std::mt19937_64 rng(3);
    const MatrixXd m = oracle::random_symmetric(6, rng);
    const GroupPartition three({{0, 1}, {2, 3}, {4, 5}});
    const MatrixXd b = block_diagonal(m, three);
    for (Index r = 0; r < 6; ++r) {
        for (Index c = 0; c < 6; ++c) CHECK(b(r, c) == (r / 2 == c / 2 ? m(r, c) : 0.0));
    }
}

TEST_CASE("theta from omega") {
    const GroupPartition p = GroupPartition::contiguous({2, 2});

    SUBCASE("independent groups give zero") {
        MatrixXd sigma = MatrixXd::Zero(4, 4);
        sigma.topLeftCorner(2, 2) << 2, 0.5, 0.5, 1;
        sigma.bottomRightCorner(2, 2) << 1, -0.3, -0.3, 1.5;
        const SymmetricMatrix s(sigma);
        const SymmetricMatrix omega(MatrixXd(sigma.inverse()));
        CHECK(max_norm(theta_from_omega(omega, s, p).dense()) < 1e-12);
    }

    SUBCASE("one inter-group edge at d = 4") {
        MatrixXd omega(4, 4);
        omega << 2, 0.6, 0, 0,
                 0.6, 2, 0.5, 0,
                 0, 0.5, 2, 0.7,
                 0, 0, 0.7, 2;
        const MatrixXd sigma = omega.inverse();
        const SymmetricMatrix theta = theta_from_omega(SymmetricMatrix(omega), SymmetricMatrix(MatrixXd(sigma)), p);

        // Direct oracle: invert the blocks of sigma by hand.
        MatrixXd sg_inv = MatrixXd::Zero(4, 4);
        sg_inv.topLeftCorner(2, 2) = sigma.topLeftCorner(2, 2).inverse();
        sg_inv.bottomRightCorner(2, 2) = sigma.bottomRightCorner(2, 2).inverse();
        const MatrixXd expect = omega - sg_inv;
        CHECK(max_norm((theta.dense() - expect).eval()) < 1e-12);

        CHECK(count_nonzero(theta.dense(), kGroundTruthZero) <= 4);
        // Only the (2,3) entry of each diagonal block can be nonzero, with
        // the cross block carrying the edge itself.
        CHECK(std::abs(theta(0, 0)) < kGroundTruthZero);
        CHECK(std::abs(theta(3, 3)) < kGroundTruthZero);
        CHECK(std::abs(theta(1, 1)) > kGroundTruthZero);
        CHECK(std::abs(theta(2, 2)) > kGroundTruthZero);
    }

    SUBCASE("cross blocks equal omega") {
        std::mt19937_64 rng(11);
        const MatrixXd omega = oracle::random_spd(6, rng);
        const GroupPartition q = GroupPartition::contiguous({3, 3});
        const SymmetricMatrix theta =
            theta_from_omega(SymmetricMatrix(omega), SymmetricMatrix(MatrixXd(omega.inverse())), q);
        for (const auto& [j, k] : q.cross_pairs()) CHECK(theta(j, k) == omega(j, k));
    }
}

TEST_CASE("block diagonal inverse rejects singular blocks") {
    const GroupPartition p = GroupPartition::contiguous({2, 2});
    MatrixXd m = MatrixXd::Identity(4, 4);
    m(3, 3) = 0.0;
    CHECK_THROWS_AS(block_diagonal_inverse(m, p), NumericalError);
}
