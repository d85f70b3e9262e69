#include "isa/clime.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace isa {

namespace lp {

namespace {

constexpr double kPivotTol = 1e-10;
constexpr double kCostTol = 1e-10;
constexpr double kFeasTol = 1e-9;
constexpr int kDegenerateRunBeforeBland = 50;

class Tableau {
public:
    Tableau(const MatrixXd& a, const VectorXd& b) : m_(a.rows()), n_(a.cols()) {
        std::vector<Index> negative;
        for (Index i = 0; i < m_; ++i) {
            if (b(i) < 0.0) negative.push_back(i);
        }
        num_art_ = static_cast<Index>(negative.size());
        cols_ = n_ + m_ + num_art_;
        t_ = MatrixXd::Zero(m_ + 1, cols_ + 1);
        basis_.assign(static_cast<std::size_t>(m_), -1);
        Index art = 0;
        for (Index i = 0; i < m_; ++i) {
            const double sgn = b(i) < 0.0 ? -1.0 : 1.0;
            t_.row(i).head(n_) = sgn * a.row(i);
            t_(i, n_ + i) = sgn;
            t_(i, cols_) = sgn * b(i);
            if (b(i) < 0.0) {
                t_(i, n_ + m_ + art) = 1.0;
                basis_[static_cast<std::size_t>(i)] = n_ + m_ + art;
                ++art;
            } else {
                basis_[static_cast<std::size_t>(i)] = n_ + i;
            }
        }
    }

    Index rows() const { return m_; }
    Index num_artificial() const { return num_art_; }
    bool is_artificial(Index col) const { return col >= n_ + m_; }
    const std::vector<Index>& basis() const { return basis_; }

    void set_phase_one_costs() {
        t_.row(m_).setZero();
        for (Index i = 0; i < m_; ++i) {
            if (is_artificial(basis_[static_cast<std::size_t>(i)])) t_.row(m_) -= t_.row(i);
        }
        for (Index j = n_ + m_; j < cols_; ++j) t_(m_, j) = 0.0;
    }

    void set_phase_two_costs(const VectorXd& c) {
        t_.row(m_).setZero();
        t_.row(m_).head(n_) = c.transpose();
        for (Index i = 0; i < m_; ++i) {
            const Index bcol = basis_[static_cast<std::size_t>(i)];
            const double cb = bcol < n_ ? c(bcol) : 0.0;
            if (cb != 0.0) t_.row(m_) -= cb * t_.row(i);
        }
    }

    // Minimizes the current cost row; returns false on unboundedness.
    Status optimize(bool allow_artificial, int& pivots, int max_pivots) {
        int degenerate_run = 0;
        bool bland = false;
        const Index limit = allow_artificial ? cols_ : n_ + m_;
        while (true) {
            Index enter = -1;
            double best = -kCostTol;
            for (Index j = 0; j < limit; ++j) {
                const double rc = t_(m_, j);
                if (rc < -kCostTol) {
                    if (bland) {
                        enter = j;
                        break;
                    }
                    if (rc < best) {
                        best = rc;
                        enter = j;
                    }
                }
            }
            if (enter < 0) return Status::Optimal;
            if (pivots >= max_pivots) return Status::IterationLimit;

            Index leave = -1;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (Index i = 0; i < m_; ++i) {
                const double coef = t_(i, enter);
                if (coef > kPivotTol) {
                    const double ratio = t_(i, cols_) / coef;
                    if (ratio < best_ratio - 1e-14 ||
                        (ratio <= best_ratio + 1e-14 && leave >= 0 &&
                         basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
                        best_ratio = std::min(ratio, best_ratio);
                        leave = i;
                    }
                }
            }
            if (leave < 0) return Status::Unbounded;
            degenerate_run = best_ratio <= 1e-14 ? degenerate_run + 1 : 0;
            if (degenerate_run > kDegenerateRunBeforeBland) bland = true;
            pivot(leave, enter);
            ++pivots;
        }
    }

    void pivot(Index row, Index col) {
        t_.row(row) /= t_(row, col);
        for (Index i = 0; i <= m_; ++i) {
            if (i != row) {
                const double f = t_(i, col);
                if (f != 0.0) t_.row(i) -= f * t_.row(row);
            }
        }
        basis_[static_cast<std::size_t>(row)] = col;
    }

    // Moves zero-level artificials out of the basis where possible.
    void drive_out_artificials() {
        for (Index i = 0; i < m_; ++i) {
            if (!is_artificial(basis_[static_cast<std::size_t>(i)])) continue;
            for (Index j = 0; j < n_ + m_; ++j) {
                if (std::abs(t_(i, j)) > 1e-9) {
                    pivot(i, j);
                    break;
                }
            }
        }
    }

    double objective() const { return -t_(m_, cols_); }

    VectorXd solution() const {
        VectorXd x = VectorXd::Zero(n_);
        for (Index i = 0; i < m_; ++i) {
            const Index bcol = basis_[static_cast<std::size_t>(i)];
            if (bcol < n_) x(bcol) = t_(i, cols_);
        }
        return x;
    }

private:
    Index m_, n_, num_art_ = 0, cols_ = 0;
    MatrixXd t_;
    std::vector<Index> basis_;
};

// Recomputes basic values from [A | I] x = b for a clean vertex.
VectorXd refine(const MatrixXd& a, const VectorXd& b, const std::vector<Index>& basis, const VectorXd& fallback) {
    const Index m = a.rows(), n = a.cols();
    MatrixXd bmat(m, m);
    for (Index i = 0; i < m; ++i) {
        const Index col = basis[static_cast<std::size_t>(i)];
        if (col >= n + m) return fallback;
        if (col < n) {
            bmat.col(i) = a.col(col);
        } else {
            bmat.col(i).setZero();
            bmat(col - n, i) = 1.0;
        }
    }
    Eigen::FullPivLU<MatrixXd> lu(bmat);
    if (!lu.isInvertible()) return fallback;
    const VectorXd xb = lu.solve(b);
    VectorXd x = VectorXd::Zero(n);
    for (Index i = 0; i < m; ++i) {
        const Index col = basis[static_cast<std::size_t>(i)];
        if (xb(i) < -kFeasTol) return fallback;
        if (col < n) x(col) = std::max(0.0, xb(i));
    }
    return x;
}

}  // namespace

Result solve(const VectorXd& c, const MatrixXd& a, const VectorXd& b) {
    if (c.size() != a.cols() || b.size() != a.rows()) throw DimensionError("lp::solve: dimension mismatch");
    Result res;
    Tableau tab(a, b);
    const int max_pivots = 50 * static_cast<int>(a.rows() + a.cols()) + 1000;
    if (tab.num_artificial() > 0) {
        tab.set_phase_one_costs();
        const Status st = tab.optimize(true, res.pivots, max_pivots);
        if (st == Status::IterationLimit) {
            res.status = st;
            return res;
        }
        if (tab.objective() > kFeasTol * (1.0 + b.cwiseAbs().maxCoeff())) {
            res.status = Status::Infeasible;
            return res;
        }
        tab.drive_out_artificials();
    }
    tab.set_phase_two_costs(c);
    res.status = tab.optimize(false, res.pivots, max_pivots);
    if (res.status != Status::Optimal) return res;
    res.x = refine(a, b, tab.basis(), tab.solution());
    res.objective = c.dot(res.x);
    return res;
}

}  // namespace lp

ClimeInfeasible::ClimeInfeasible(Index row_, double lambda_prime, double suggested)
    : NumericalError("CLIME program infeasible for row " + std::to_string(row_ + 1) + " at lambda' = " +
                     std::to_string(lambda_prime) + "; try lambda' >= " + std::to_string(suggested)),
      row(row_),
      suggested_lambda_prime(suggested) {}

ColumnMask block_mask(const GroupPartition& p) {
    ColumnMask mask(static_cast<std::size_t>(p.dim()));
    for (Index j = 0; j < p.dim(); ++j) mask[static_cast<std::size_t>(j)] = p.group(p.group_of(j));
    return mask;
}

namespace {

std::vector<Index> allowed_columns(Index d, Index row, const std::optional<ColumnMask>& mask) {
    if (mask) {
        if (static_cast<Index>(mask->size()) != d) throw DimensionError("solve_clime_rows: mask size mismatch");
        auto cols = (*mask)[static_cast<std::size_t>(row)];
        for (Index c : cols) {
            if (c < 0 || c >= d) throw std::out_of_range("solve_clime_rows: mask column out of range");
        }
        std::sort(cols.begin(), cols.end());
        return cols;
    }
    std::vector<Index> cols(static_cast<std::size_t>(d));
    for (Index c = 0; c < d; ++c) cols[static_cast<std::size_t>(c)] = c;
    return cols;
}

// Constraint rows of the target restricted to `cols`; rows that are
// identically zero are dropped (their constraint is |e_j(i)| <= lambda').
struct RowProgram {
    MatrixXd coef;             // active constraint rows x |cols|
    VectorXd e;                // e_j restricted to active rows
    bool dropped_unit = false;  // row j itself was dropped
};

RowProgram build_row_program(const MatrixXd& target, Index row, const std::vector<Index>& cols) {
    const Index d = target.rows();
    const auto k = static_cast<Index>(cols.size());
    std::vector<Index> active;
    for (Index i = 0; i < d; ++i) {
        bool nonzero = false;
        for (Index c : cols) nonzero = nonzero || target(i, c) != 0.0;
        if (nonzero) active.push_back(i);
    }
    RowProgram prog;
    prog.coef.resize(static_cast<Index>(active.size()), k);
    prog.e = VectorXd::Zero(static_cast<Index>(active.size()));
    prog.dropped_unit = true;
    for (std::size_t r = 0; r < active.size(); ++r) {
        for (Index c = 0; c < k; ++c) prog.coef(static_cast<Index>(r), c) = target(active[r], cols[static_cast<std::size_t>(c)]);
        if (active[r] == row) {
            prog.e(static_cast<Index>(r)) = 1.0;
            prog.dropped_unit = false;
        }
    }
    return prog;
}

}  // namespace

double clime_min_feasible_lambda(const SymmetricMatrix& target, Index row, const std::optional<ColumnMask>& mask) {
    const Index d = target.dim();
    const auto cols = allowed_columns(d, row, mask);
    const RowProgram prog = build_row_program(target, row, cols);
    if (prog.dropped_unit) return 1.0;
    const Index r = prog.coef.rows(), k = prog.coef.cols();
    // Variables [m+, m-, t]: minimize t s.t. +-(T m - e) <= t.
    MatrixXd a(2 * r, 2 * k + 1);
    a << prog.coef, -prog.coef, -VectorXd::Ones(r), -prog.coef, prog.coef, -VectorXd::Ones(r);
    VectorXd b(2 * r);
    b << prog.e, -prog.e;
    VectorXd c = VectorXd::Zero(2 * k + 1);
    c(2 * k) = 1.0;
    const lp::Result res = lp::solve(c, a, b);
    if (res.status != lp::Status::Optimal) return 1.0;
    return res.objective;
}

ClimeSolution solve_clime_rows(const SymmetricMatrix& target, double lambda_prime, const std::optional<ColumnMask>& mask) {
    if (!(lambda_prime > 0.0)) throw std::invalid_argument("solve_clime_rows: lambda' must be positive");
    const Index d = target.dim();
    const MatrixXd& t = target.dense();
    ClimeSolution sol;
    sol.lambda_prime = lambda_prime;
    sol.m = MatrixXd::Zero(d, d);
    for (Index j = 0; j < d; ++j) {
        const auto cols = allowed_columns(d, j, mask);
        const RowProgram prog = build_row_program(t, j, cols);
        if (prog.dropped_unit && lambda_prime < 1.0) {
            throw ClimeInfeasible(j, lambda_prime, 1.0);
        }
        const Index r = prog.coef.rows(), k = prog.coef.cols();
        if (r == 0) continue;  // m_j = 0 is optimal
        MatrixXd a(2 * r, 2 * k);
        a << prog.coef, -prog.coef, -prog.coef, prog.coef;
        VectorXd b(2 * r);
        b << (VectorXd::Constant(r, lambda_prime) + prog.e), (VectorXd::Constant(r, lambda_prime) - prog.e);
        const lp::Result res = lp::solve(VectorXd::Ones(2 * k), a, b);
        if (res.status == lp::Status::Infeasible) {
            const double min_lambda = clime_min_feasible_lambda(target, j, mask);
            throw ClimeInfeasible(j, lambda_prime, std::max(min_lambda * 1.1, lambda_prime * 1.5));
        }
        if (res.status != lp::Status::Optimal) {
            throw NumericalError("solve_clime_rows: linear program for row " + std::to_string(j + 1) +
                                 " did not reach optimality");
        }
        for (Index c = 0; c < k; ++c) sol.m(j, cols[static_cast<std::size_t>(c)]) = res.x(c) - res.x(k + c);
    }
    sol.max_row_l1 = sol.m.cwiseAbs().rowwise().sum().maxCoeff();
    sol.feasibility_gap = max_norm((sol.m * t - MatrixXd::Identity(d, d)).eval());
    return sol;
}

}  // namespace isa
