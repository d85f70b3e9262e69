#include "isa/strings_solver.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace isa {

void AdmmConfig::validate() const {
    if (!(rho > 0.0)) throw std::invalid_argument("AdmmConfig: rho must be positive");
    if (!(tol > 0.0)) throw std::invalid_argument("AdmmConfig: tol must be positive");
    if (max_iters < 1) throw std::invalid_argument("AdmmConfig: max_iters must be positive");
}

AdmmState AdmmState::initial(const CovariancePair& cov) {
    const Index d = cov.full.dim();
    AdmmState s;
    s.w = SymmetricMatrix::zero(d);
    s.z = s.w;
    s.u1 = s.w;
    s.u2 = s.w;
    s.y = cov.blocked;
    return s;
}

BlockedEigen BlockedEigen::compute(const SymmetricMatrix& blocked) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(blocked.dense());
    if (es.info() != Eigen::Success) throw NumericalError("BlockedEigen: eigendecomposition failed");
    return BlockedEigen{es.eigenvectors(), es.eigenvalues()};
}

double empirical_loss(const SymmetricMatrix& theta, const CovariancePair& cov) {
    if (theta.dim() != cov.full.dim()) throw DimensionError("empirical_loss: dimension mismatch");
    const MatrixXd& sg = cov.blocked;
    const MatrixXd inner = sg * theta.dense() * sg + sg;
    Eigen::LLT<MatrixXd> llt(inner);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return theta.dense().cwiseProduct(cov.full.dense()).sum() - logdet;
}

SymmetricMatrix loss_gradient(const SymmetricMatrix& theta, const CovariancePair& cov) {
    if (theta.dim() != cov.full.dim()) throw DimensionError("loss_gradient: dimension mismatch");
    const Index d = theta.dim();
    const MatrixXd& sg = cov.blocked;
    // X = S_G (theta S_G + I)^{-1}  <=>  (S_G theta + I) X^T = S_G.
    const MatrixXd lhs = sg * theta.dense() + MatrixXd::Identity(d, d);
    Eigen::PartialPivLU<MatrixXd> lu(lhs);
    const MatrixXd xt = lu.solve(sg);
    return SymmetricMatrix::symmetrized(cov.full.dense() - xt.transpose());
}

double penalized_objective(const SymmetricMatrix& theta, const CovariancePair& cov, double lambda) {
    return empirical_loss(theta, cov) + lambda * theta.dense().cwiseAbs().sum();
}

double kkt_violation(const SymmetricMatrix& theta, const CovariancePair& cov, double lambda, double active_threshold) {
    const SymmetricMatrix grad = loss_gradient(theta, cov);
    double worst = 0.0;
    const Index d = theta.dim();
    for (Index k = 0; k < d; ++k) {
        for (Index j = 0; j < d; ++j) {
            const double g = grad(j, k);
            const double t = theta(j, k);
            const double v = std::abs(t) > active_threshold ? std::abs(g + lambda * (t > 0 ? 1.0 : -1.0))
                                                            : std::max(0.0, std::abs(g) - lambda);
            worst = std::max(worst, v);
        }
    }
    return worst;
}

MatrixXd solve_stein(const MatrixXd& rhs, const MatrixXd& v, const VectorXd& a) {
    MatrixXd t = v.transpose() * rhs * v;
    const Index d = a.size();
    for (Index k = 0; k < d; ++k) {
        for (Index j = 0; j < d; ++j) t(j, k) /= 1.0 + a(j) * a(k);
    }
    return v * t * v.transpose();
}

namespace {

// B^k = Z - S_G (S_G - Y) S_G - (1/rho)(S + U1 + S_G U2 S_G), grouped so that
// S_G multiplies from both sides only once.
MatrixXd stein_rhs(const AdmmState& state, const CovariancePair& cov, double rho) {
    const MatrixXd& sg = cov.blocked;
    const MatrixXd middle = sg - state.y.dense() + state.u2.dense() / rho;
    MatrixXd b = state.z.dense() - (cov.full.dense() + state.u1.dense()) / rho;
    b.noalias() -= sg * middle * sg;
    return b;
}

MatrixXd log_det_prox(const MatrixXd& c, double rho) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(c);
    if (es.info() != Eigen::Success) throw NumericalError("admm_y_update: eigendecomposition failed");
    const VectorXd lam = es.eigenvalues();
    const VectorXd ytilde = (lam.array() + (lam.array().square() + 4.0 * rho).sqrt()) / (2.0 * rho);
    const MatrixXd& q = es.eigenvectors();
    return q * ytilde.asDiagonal() * q.transpose();
}

}  // namespace

SymmetricMatrix admm_w_update(const AdmmState& state, const CovariancePair& cov, const AdmmConfig& cfg,
                              const BlockedEigen& eig) {
    cfg.validate();
    return SymmetricMatrix::symmetrized(solve_stein(stein_rhs(state, cov, cfg.rho), eig.vectors, eig.squared_values()));
}

SymmetricMatrix admm_y_update(const AdmmState& state, const CovariancePair& cov, const AdmmConfig& cfg) {
    cfg.validate();
    const MatrixXd& sg = cov.blocked;
    const MatrixXd c = state.u2.dense() + cfg.rho * (sg * state.w.dense() * sg + sg);
    return SymmetricMatrix::symmetrized(log_det_prox(c, cfg.rho));
}

StringsFit fit_strings(const CovariancePair& cov, double lambda, const AdmmConfig& cfg,
                       const std::optional<AdmmState>& warm_start) {
    cfg.validate();
    if (!(lambda >= 0.0)) throw std::invalid_argument("fit_strings: lambda must be nonnegative");
    const Index d = cov.full.dim();
    if (cov.blocked.dim() != d) throw DimensionError("fit_strings: covariance dimension mismatch");
    if (Eigen::LLT<MatrixXd>(cov.blocked.dense()).info() != Eigen::Success) {
        throw NumericalError("fit_strings: blocked covariance is not positive definite");
    }
    if (warm_start && warm_start->w.dim() != d) throw DimensionError("fit_strings: warm start dimension mismatch");

    const double rho = cfg.rho;
    const BlockedEigen eig = BlockedEigen::compute(cov.blocked);
    const MatrixXd& v = eig.vectors;
    const VectorXd a = eig.squared_values();
    const MatrixXd& sg = cov.blocked;
    const MatrixXd& s = cov.full;
    const double kkt_tol = 10.0 * cfg.tol;

    AdmmState init = warm_start ? *warm_start : AdmmState::initial(cov);
    MatrixXd w = init.w, y = init.y, z = init.z, u1 = init.u1, u2 = init.u2;
    MatrixXd k_mat(d, d), c(d, d), b(d, d), z_prev(d, d);

    StringsFit fit;
    fit.lambda = lambda;
    double primal = std::numeric_limits<double>::infinity();
    double dual = std::numeric_limits<double>::infinity();
    int iter = 0;
    for (iter = 1; iter <= cfg.max_iters; ++iter) {
        // W: W + A W A = B.
        b = z - (s + u1) / rho;
        b.noalias() -= sg * (sg - y + u2 / rho) * sg;
        w = solve_stein(b, v, a);
        if (cfg.symmetrize_each_iter) w = (0.5 * (w + w.transpose())).eval();

        // Y: closed-form prox of -log det.
        k_mat.noalias() = sg * w * sg;
        k_mat += sg;
        c = u2 + rho * k_mat;
        y = log_det_prox(c, rho);

        // Z: soft threshold.
        z_prev.swap(z);
        z = soft_threshold((w + u1 / rho).eval(), lambda / rho);
        if (cfg.symmetrize_each_iter) z = (0.5 * (z + z.transpose())).eval();

        u1 += rho * (w - z);
        u2 += rho * (k_mat - y);

        const double z_norm = z.norm();
        primal = std::max((w - z).norm(), (k_mat - y).norm());
        dual = rho * (z - z_prev).norm();
        if (cfg.record_history) fit.residual_history.push_back(std::max(primal, dual));
        if (!std::isfinite(primal) || !std::isfinite(dual)) break;

        if (primal <= cfg.tol * (1.0 + z_norm) && dual <= cfg.tol * (1.0 + u1.norm())) {
            const SymmetricMatrix zs = SymmetricMatrix::symmetrized(z);
            fit.kkt_residual = kkt_violation(zs, cov, lambda, cfg.tol);
            if (fit.kkt_residual <= kkt_tol) {
                fit.converged = true;
                break;
            }
        }
    }
    fit.iters_used = std::min(iter, cfg.max_iters);
    fit.final_residuals = {primal, dual};

    if (!z.allFinite() || !w.allFinite() || !y.allFinite() || !u1.allFinite() || !u2.allFinite()) {
        fit.converged = false;
        fit.objective = std::numeric_limits<double>::infinity();
        fit.theta_hat = SymmetricMatrix::zero(d);
        fit.state = AdmmState::initial(cov);
        return fit;
    }

    fit.theta_hat = SymmetricMatrix::symmetrized(z);
    if (!fit.converged) fit.kkt_residual = kkt_violation(fit.theta_hat, cov, lambda, cfg.tol);
    fit.objective = penalized_objective(fit.theta_hat, cov, lambda);
    fit.state.w = SymmetricMatrix::symmetrized(w);
    fit.state.y = SymmetricMatrix::symmetrized(y);
    fit.state.z = fit.theta_hat;
    fit.state.u1 = SymmetricMatrix::symmetrized(u1);
    fit.state.u2 = SymmetricMatrix::symmetrized(u2);
    fit.state.iter = fit.iters_used;
    fit.state.primal_residual = primal;
    fit.state.dual_residual = dual;
    return fit;
}

double validation_loss(const SymmetricMatrix& theta, const CovariancePair& cov_val) {
    const MatrixXd& s = cov_val.full;
    const MatrixXd& sg = cov_val.blocked;
    return (s * theta.dense() * sg + s - sg).norm();
}

std::vector<double> default_lambda_grid(Index d, Index n, int count, double c_max) {
    if (d < 2 || n < 1 || count < 1 || !(c_max > 0.0)) throw std::invalid_argument("default_lambda_grid: bad arguments");
    const double rate = std::sqrt(std::log(static_cast<double>(d)) / static_cast<double>(n));
    std::vector<double> grid(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) grid[static_cast<std::size_t>(i)] = c_max * (i + 1) / count * rate;
    return grid;
}

LambdaSelection select_lambda(const CovariancePair& cov_train, const CovariancePair& cov_val,
                              const std::vector<double>& grid, const AdmmConfig& cfg) {
    if (grid.empty()) throw std::invalid_argument("select_lambda: empty grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0)) throw std::invalid_argument("select_lambda: lambda values must be nonnegative");
        for (std::size_t k = 0; k < i; ++k) {
            if (grid[k] == grid[i]) throw std::invalid_argument("select_lambda: duplicate lambda values");
        }
    }
    std::vector<std::size_t> order(grid.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return grid[x] > grid[y]; });

    LambdaSelection sel;
    sel.grid = grid;
    sel.fits.resize(grid.size());
    sel.val_losses.assign(grid.size(), std::numeric_limits<double>::infinity());
    std::optional<AdmmState> warm;
    bool any_finite = false;
    for (std::size_t i : order) {
        StringsFit fit = fit_strings(cov_train, grid[i], cfg, warm);
        if (std::isfinite(fit.objective)) {
            sel.val_losses[i] = validation_loss(fit.theta_hat, cov_val);
            warm = fit.state;
            any_finite = true;
        } else {
            warm.reset();
        }
        sel.fits[i] = std::move(fit);
    }
    if (!any_finite) throw NumericalError("select_lambda: every fit diverged");

    std::size_t best = order.front();
    for (std::size_t i : order) {
        // Descending order: a later equal loss belongs to a smaller lambda.
        if (sel.val_losses[i] <= sel.val_losses[best]) best = i;
    }
    sel.chosen_index = best;
    return sel;
}

}  // namespace isa
