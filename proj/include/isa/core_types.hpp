#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace isa {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

/// Thrown when matrix or partition dimensions are incompatible.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical routine cannot produce a valid result
/// (singular block, failed factorization, infeasible program).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Zero threshold used when counting the support of exactly computed
/// ground-truth matrices.
inline constexpr double kGroundTruthZero = 1e-10;

/// Relative asymmetry above which an input is rejected instead of
/// symmetrized.
inline constexpr double kAsymmetryTolerance = 1e-6;

template <typename Derived>
typename Derived::Scalar max_norm(const Eigen::MatrixBase<Derived>& m) {
    return m.size() == 0 ? typename Derived::Scalar(0) : m.cwiseAbs().maxCoeff();
}

template <typename Derived>
Index count_nonzero(const Eigen::MatrixBase<Derived>& m, typename Derived::Scalar threshold) {
    return (m.array().abs() > threshold).count();
}

/**
 * Dense square matrix with exact symmetry.
 *
 * Every constructor stores (A + A^T) / 2, so entries (j,k) and (k,j) are
 * bitwise equal. The checked constructor rejects non-square input, non-finite
 * entries, and asymmetry above kAsymmetryTolerance relative to max(1, |A|_max).
 * Converts implicitly to the underlying Eigen matrix so it can take part in
 * expressions.
 */
template <typename Scalar>
class BasicSymmetricMatrix {
public:
    using Dense = Matrix<Scalar>;

    BasicSymmetricMatrix() = default;

    template <typename Derived>
    explicit BasicSymmetricMatrix(const Eigen::MatrixBase<Derived>& m) {
        check_square_finite(m);
        const Scalar scale = std::max<Scalar>(Scalar(1), max_norm(m));
        const Scalar asym = max_norm((m - m.transpose()).eval());
        if (asym > Scalar(kAsymmetryTolerance) * scale) {
            throw std::invalid_argument("SymmetricMatrix: input asymmetry " + std::to_string(double(asym)) +
                                        " exceeds tolerance");
        }
        data_ = symmetric_part(m);
    }

    /// Symmetrizes without the asymmetry check. Used for solver iterates whose
    /// drift is rounding only.
    template <typename Derived>
    static BasicSymmetricMatrix symmetrized(const Eigen::MatrixBase<Derived>& m) {
        check_square_finite(m);
        BasicSymmetricMatrix out;
        out.data_ = symmetric_part(m);
        return out;
    }

    static BasicSymmetricMatrix identity(Index d) { return symmetrized(Dense::Identity(d, d)); }
    static BasicSymmetricMatrix zero(Index d) { return symmetrized(Dense::Zero(d, d)); }

    Index dim() const { return data_.rows(); }
    const Dense& dense() const { return data_; }
    operator const Dense&() const { return data_; }  // NOLINT(google-explicit-constructor)
    Scalar operator()(Index j, Index k) const { return data_(j, k); }

    friend bool operator==(const BasicSymmetricMatrix& a, const BasicSymmetricMatrix& b) {
        return a.data_.rows() == b.data_.rows() && a.data_ == b.data_;
    }

private:
    template <typename Derived>
    static void check_square_finite(const Eigen::MatrixBase<Derived>& m) {
        if (m.rows() != m.cols()) {
            throw DimensionError("SymmetricMatrix: matrix is " + std::to_string(m.rows()) + "x" +
                                 std::to_string(m.cols()));
        }
        if (!m.allFinite()) throw std::invalid_argument("SymmetricMatrix: non-finite entry");
    }

    template <typename Derived>
    static Dense symmetric_part(const Eigen::MatrixBase<Derived>& m) {
        Dense out = m;
        const Index d = out.rows();
        for (Index k = 0; k < d; ++k) {
            for (Index j = k + 1; j < d; ++j) {
                const Scalar v = (out(j, k) + out(k, j)) / Scalar(2);
                out(j, k) = v;
                out(k, j) = v;
            }
        }
        return out;
    }

    Dense data_;
};

using SymmetricMatrix = BasicSymmetricMatrix<double>;

/**
 * Ordered disjoint groups covering {0, ..., d-1}. Indices are 0-based; files
 * and reports use 1-based indices and convert at the boundary.
 */
class GroupPartition {
public:
    GroupPartition() = default;
    explicit GroupPartition(std::vector<std::vector<Index>> groups);

    /// Consecutive groups of the given sizes.
    static GroupPartition contiguous(const std::vector<Index>& sizes);
    /// L contiguous groups of (nearly) equal size; the first d % L groups get
    /// one extra index.
    static GroupPartition equal(Index d, Index num_groups);

    Index dim() const { return d_; }
    Index num_groups() const { return static_cast<Index>(groups_.size()); }
    const std::vector<std::vector<Index>>& groups() const { return groups_; }
    const std::vector<Index>& group(Index a) const { return groups_[static_cast<std::size_t>(a)]; }
    Index group_of(Index i) const { return group_of_[static_cast<std::size_t>(i)]; }
    bool same_group(Index i, Index j) const { return group_of(i) == group_of(j); }

    /// All (j, k) with j < k lying in different groups.
    std::vector<std::pair<Index, Index>> cross_pairs() const;

    friend bool operator==(const GroupPartition& a, const GroupPartition& b) { return a.groups_ == b.groups_; }

private:
    std::vector<std::vector<Index>> groups_;
    std::vector<Index> group_of_;
    Index d_ = 0;
};

/**
 * Index of an inter-subject entry. j and k are 0-based and must lie in
 * different groups; `row_group` / `col_group` record which.
 */
struct InterBlockIndex {
    Index j = 0;
    Index k = 0;
    Index row_group = 0;
    Index col_group = 1;

    static InterBlockIndex make(Index j, Index k, const GroupPartition& p);

    friend bool operator==(const InterBlockIndex& a, const InterBlockIndex& b) { return a.j == b.j && a.k == b.k; }
    friend bool operator<(const InterBlockIndex& a, const InterBlockIndex& b) {
        return a.j != b.j ? a.j < b.j : a.k < b.k;
    }
};

/// Ground-truth bundle produced by the generator.
struct IsaModel {
    SymmetricMatrix sigma;
    SymmetricMatrix omega;
    SymmetricMatrix theta;
    /// Inter-block support of omega as (j, k) pairs with j < k.
    std::vector<std::pair<Index, Index>> support;
    GroupPartition partition;
    Index s = 0;
    /// Condition numbers before and after diagonal standardization.
    double condition_raw = 0.0;
    double condition_standardized = 0.0;
};

/// Copy of m restricted to within-group index pairs; cross-group entries are zero.
template <typename Derived>
Matrix<typename Derived::Scalar> block_diagonal(const Eigen::MatrixBase<Derived>& m, const GroupPartition& p) {
    if (m.rows() != p.dim() || m.cols() != p.dim()) {
        throw DimensionError("block_diagonal: matrix dimension does not match partition");
    }
    Matrix<typename Derived::Scalar> out = Matrix<typename Derived::Scalar>::Zero(m.rows(), m.cols());
    for (const auto& g : p.groups()) {
        for (Index c : g) {
            for (Index r : g) out(r, c) = m(r, c);
        }
    }
    return out;
}

inline SymmetricMatrix block_diagonal(const SymmetricMatrix& m, const GroupPartition& p) {
    return SymmetricMatrix::symmetrized(block_diagonal(m.dense(), p));
}

/// Inverse of a block-diagonal matrix computed block by block (Cholesky per
/// block). Throws NumericalError if a block is not positive definite.
MatrixXd block_diagonal_inverse(const MatrixXd& blocked, const GroupPartition& p);

/// Theta = Omega - (Sigma_G)^{-1}, with Sigma_G the block-diagonal part of sigma.
SymmetricMatrix theta_from_omega(const SymmetricMatrix& omega, const SymmetricMatrix& sigma, const GroupPartition& p);

}  // namespace isa
