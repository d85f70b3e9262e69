#include "isa/covariance.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numbers>
#include <numeric>
#include <vector>

namespace isa {

SymmetricMatrix sample_covariance(const MatrixXd& data, bool center) {
    if (data.rows() < 2 || data.cols() < 2) throw DimensionError("sample_covariance: need n >= 2 and d >= 2");
    if (!data.allFinite()) throw std::invalid_argument("sample_covariance: non-finite input");
    const auto n = static_cast<double>(data.rows());
    if (center) {
        const MatrixXd centered = data.rowwise() - data.colwise().mean();
        return SymmetricMatrix::symmetrized((centered.transpose() * centered) / n);
    }
    return SymmetricMatrix::symmetrized((data.transpose() * data) / n);
}

CovariancePair blocked_covariance(const SymmetricMatrix& full, const GroupPartition& p, Index n) {
    if (full.dim() != p.dim()) throw DimensionError("blocked_covariance: dimension mismatch");
    if (n < 1) throw std::invalid_argument("blocked_covariance: n must be positive");
    CovariancePair out;
    out.full = full;
    out.n = n;
    MatrixXd blocked = block_diagonal(full.dense(), p);
    const double smallest = Eigen::SelfAdjointEigenSolver<MatrixXd>(blocked, Eigen::EigenvaluesOnly).eigenvalues()(0);
    if (smallest < kPerturbationTrigger) {
        out.epsilon = std::sqrt(std::log(static_cast<double>(p.dim())) / static_cast<double>(n));
        out.perturbation_applied = true;
        blocked.diagonal().array() += out.epsilon;
    }
    out.blocked = SymmetricMatrix::symmetrized(blocked);
    return out;
}

namespace {

int sign(double v) { return (v > 0.0) - (v < 0.0); }

long long pair_loop_sum(const VectorXd& x, const VectorXd& y) {
    long long sum = 0;
    const Index n = x.size();
    for (Index i = 0; i < n; ++i) {
        for (Index k = i + 1; k < n; ++k) sum += sign(x(i) - x(k)) * sign(y(i) - y(k));
    }
    return sum;
}

long long tied_pairs(const std::vector<double>& sorted) {
    long long ties = 0;
    std::size_t run = 1;
    for (std::size_t i = 1; i <= sorted.size(); ++i) {
        if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
            ++run;
        } else {
            ties += static_cast<long long>(run * (run - 1) / 2);
            run = 1;
        }
    }
    return ties;
}

// Counts strict inversions (a[i] > a[j], i < j) while merge-sorting a.
long long count_inversions(std::vector<double>& a, std::vector<double>& scratch, std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    long long swaps = count_inversions(a, scratch, lo, mid) + count_inversions(a, scratch, mid, hi);
    std::size_t i = lo, j = mid, out = lo;
    while (i < mid && j < hi) {
        if (a[j] < a[i]) {
            swaps += static_cast<long long>(mid - i);
            scratch[out++] = a[j++];
        } else {
            scratch[out++] = a[i++];
        }
    }
    while (i < mid) scratch[out++] = a[i++];
    while (j < hi) scratch[out++] = a[j++];
    std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo), scratch.begin() + static_cast<std::ptrdiff_t>(hi),
              a.begin() + static_cast<std::ptrdiff_t>(lo));
    return swaps;
}

// Knight's algorithm with tie handling.
long long merge_sort_sum(const VectorXd& x, const VectorXd& y) {
    const auto n = static_cast<std::size_t>(x.size());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto ia = static_cast<Index>(a), ib = static_cast<Index>(b);
        return x(ia) != x(ib) ? x(ia) < x(ib) : y(ia) < y(ib);
    });
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = x(static_cast<Index>(order[i]));
        ys[i] = y(static_cast<Index>(order[i]));
    }
    const long long total = static_cast<long long>(n) * static_cast<long long>(n - 1) / 2;
    const long long x_ties = tied_pairs(xs);
    long long joint_ties = 0;
    std::size_t run = 1;
    for (std::size_t i = 1; i <= n; ++i) {
        if (i < n && xs[i] == xs[i - 1] && ys[i] == ys[i - 1]) {
            ++run;
        } else {
            joint_ties += static_cast<long long>(run * (run - 1) / 2);
            run = 1;
        }
    }
    std::vector<double> scratch(n);
    const long long swaps = count_inversions(ys, scratch, 0, n);
    const long long y_ties = tied_pairs(ys);  // ys is sorted now
    return total - x_ties - y_ties + joint_ties - 2 * swaps;
}

}  // namespace

long long kendall_sign_sum(const VectorXd& x, const VectorXd& y, KendallMethod method) {
    if (x.size() != y.size()) throw DimensionError("kendall_sign_sum: length mismatch");
    return method == KendallMethod::PairLoop ? pair_loop_sum(x, y) : merge_sort_sum(x, y);
}

SymmetricMatrix kendall_covariance(const MatrixXd& data, KendallMethod method) {
    if (data.rows() < 2) throw DimensionError("kendall_covariance: need n >= 2");
    if (!data.allFinite()) throw std::invalid_argument("kendall_covariance: non-finite input");
    const Index d = data.cols();
    const auto n = static_cast<double>(data.rows());
    const double scale = 2.0 / (n * (n - 1.0));
    MatrixXd out = MatrixXd::Identity(d, d);
    for (Index j = 0; j < d; ++j) {
        const VectorXd xj = data.col(j);
        for (Index k = j + 1; k < d; ++k) {
            const double tau = scale * static_cast<double>(kendall_sign_sum(xj, data.col(k), method));
            const double v = std::sin(std::numbers::pi / 2.0 * tau);
            out(j, k) = v;
            out(k, j) = v;
        }
    }
    return SymmetricMatrix::symmetrized(out);
}

}  // namespace isa
