#pragma once

#include "isa/core_types.hpp"
#include "isa/covariance.hpp"

#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace isa {

/// Entries with |theta_jk| above this are reported as edges.
inline constexpr double kSupportThreshold = 1e-4;

struct AdmmConfig {
    double rho = 1.0;
    int max_iters = 2000;
    double tol = 1e-4;
    bool symmetrize_each_iter = true;
    /// Keep max(primal, dual) residual of every iteration in the fit.
    bool record_history = false;

    void validate() const;
};

/// Primal (W, Y, Z) and dual (U1, U2) iterates of the splitting
///   W - Z = 0,   S_G W S_G + S_G - Y = 0.
struct AdmmState {
    SymmetricMatrix w, y, z, u1, u2;
    int iter = 0;
    double primal_residual = std::numeric_limits<double>::infinity();
    double dual_residual = std::numeric_limits<double>::infinity();

    /// W = Z = U1 = U2 = 0, Y = S_G.
    static AdmmState initial(const CovariancePair& cov);
};

struct StringsFit {
    SymmetricMatrix theta_hat;
    double lambda = 0.0;
    int iters_used = 0;
    std::pair<double, double> final_residuals{0.0, 0.0};  // primal, dual
    double objective = 0.0;
    bool converged = false;
    /// Max violation of the l1 subgradient condition at theta_hat.
    double kkt_residual = std::numeric_limits<double>::infinity();
    AdmmState state;
    std::vector<double> residual_history;
};

struct LambdaSelection {
    std::vector<double> grid;
    std::vector<double> val_losses;
    std::size_t chosen_index = 0;
    std::vector<StringsFit> fits;

    const StringsFit& chosen() const { return fits[chosen_index]; }
    double chosen_lambda() const { return grid[chosen_index]; }
};

/// Eigendecomposition S_G = V diag(s) V^T; A = S_G^2 shares V with eigenvalues s^2.
struct BlockedEigen {
    MatrixXd vectors;
    VectorXd values;

    static BlockedEigen compute(const SymmetricMatrix& blocked);
    VectorXd squared_values() const { return values.array().square(); }
};

/// Tr(theta S) - log det(S_G theta S_G + S_G); +infinity when the log-det
/// argument is not positive definite.
double empirical_loss(const SymmetricMatrix& theta, const CovariancePair& cov);

/// S - S_G (theta S_G + I)^{-1}.
SymmetricMatrix loss_gradient(const SymmetricMatrix& theta, const CovariancePair& cov);

/// empirical_loss + lambda * sum |theta_jk|.
double penalized_objective(const SymmetricMatrix& theta, const CovariancePair& cov, double lambda);

/// Largest violation of 0 in grad + lambda * d|theta| (entries with
/// |theta_jk| <= active_threshold are treated as zero).
double kkt_violation(const SymmetricMatrix& theta, const CovariancePair& cov, double lambda, double active_threshold);

/// Solves W + A W A = B^k for the current state with A = S_G^2.
SymmetricMatrix admm_w_update(const AdmmState& state, const CovariancePair& cov, const AdmmConfig& cfg,
                              const BlockedEigen& eig);

/// Solves W + A W A = rhs given the eigendecomposition A = V diag(a) V^T.
MatrixXd solve_stein(const MatrixXd& rhs, const MatrixXd& v, const VectorXd& a);

/// Closed-form log-det proximal step, using state.w as W^{k+1}.
SymmetricMatrix admm_y_update(const AdmmState& state, const CovariancePair& cov, const AdmmConfig& cfg);

/// Entry-wise (v - a)_+ - (-v - a)_+.
template <typename Derived>
Matrix<typename Derived::Scalar> soft_threshold(const Eigen::MatrixBase<Derived>& m, typename Derived::Scalar a) {
    using Scalar = typename Derived::Scalar;
    if (!(a >= Scalar(0))) throw std::invalid_argument("soft_threshold: threshold must be nonnegative");
    return m.unaryExpr([a](Scalar v) {
        return std::max(v - a, Scalar(0)) - std::max(-v - a, Scalar(0));
    });
}

inline SymmetricMatrix soft_threshold(const SymmetricMatrix& m, double a) {
    return SymmetricMatrix::symmetrized(soft_threshold(m.dense(), a));
}

/**
 * STRINGS estimate at a single lambda via ADMM.
 *
 * Stops when max(|W-Z|_F, |S_G W S_G + S_G - Y|_F) <= tol (1 + |Z|_F),
 * rho |Z^k - Z^{k-1}|_F <= tol (1 + |U1|_F) and the subgradient condition
 * holds at Z to within 10 tol; otherwise runs to max_iters and reports
 * converged = false.
 */
StringsFit fit_strings(const CovariancePair& cov, double lambda, const AdmmConfig& cfg,
                       const std::optional<AdmmState>& warm_start = std::nullopt);

/// |S_val theta S_G,val + S_val - S_G,val|_F.
double validation_loss(const SymmetricMatrix& theta, const CovariancePair& cov_val);

/// C * sqrt(log d / n) for `count` values of C evenly spaced on (0, c_max].
std::vector<double> default_lambda_grid(Index d, Index n, int count = 50, double c_max = 5.0);

/// Fits every lambda (descending, warm-started) and picks the smallest
/// validation loss; ties go to the smaller lambda. Results are in grid order.
LambdaSelection select_lambda(const CovariancePair& cov_train, const CovariancePair& cov_val,
                              const std::vector<double>& grid, const AdmmConfig& cfg);

}  // namespace isa
