#pragma once

#include "isa/core_types.hpp"

namespace isa {

/// Smallest-eigenvalue level below which the blocked covariance is ridged.
inline constexpr double kPerturbationTrigger = 1e-8;

/// Full sample covariance and its (possibly ridged) block-diagonal part.
struct CovariancePair {
    SymmetricMatrix full;
    SymmetricMatrix blocked;
    bool perturbation_applied = false;
    double epsilon = 0.0;
    Index n = 0;
};

/// (1/n) X^T X, or the column-centered version when `center` is set.
/// Rows of `data` are samples.
SymmetricMatrix sample_covariance(const MatrixXd& data, bool center);

/**
 * Block-diagonal part of `full` under `p`. When its smallest eigenvalue is
 * below kPerturbationTrigger, sqrt(log d / n) * I is added and the pair is
 * flagged as perturbed.
 */
CovariancePair blocked_covariance(const SymmetricMatrix& full, const GroupPartition& p, Index n);

enum class KendallMethod {
    PairLoop,   ///< direct O(n^2) enumeration per column pair
    MergeSort,  ///< O(n log n) inversion count per column pair
};

/**
 * Rank-based correlation estimate sin(pi/2 * tau_jk) off the diagonal and 1 on
 * it. Ties contribute zero to tau. Both methods return identical sign sums.
 */
SymmetricMatrix kendall_covariance(const MatrixXd& data, KendallMethod method = KendallMethod::PairLoop);

/// Sum over i < i' of sign((x_i - x_i')(y_i - y_i')).
long long kendall_sign_sum(const VectorXd& x, const VectorXd& y, KendallMethod method);

}  // namespace isa
