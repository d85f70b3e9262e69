#include "isa/core_types.hpp"

#include <algorithm>

namespace isa {

GroupPartition::GroupPartition(std::vector<std::vector<Index>> groups) : groups_(std::move(groups)) {
    if (groups_.size() < 2) throw std::invalid_argument("GroupPartition: need at least two groups");
    Index total = 0;
    Index max_index = -1;
    for (const auto& g : groups_) {
        if (g.empty()) throw std::invalid_argument("GroupPartition: empty group");
        total += static_cast<Index>(g.size());
        for (Index i : g) {
            if (i < 0) throw std::invalid_argument("GroupPartition: negative index");
            max_index = std::max(max_index, i);
        }
    }
    if (max_index + 1 != total) throw std::invalid_argument("GroupPartition: groups do not cover {1..d}");
    d_ = total;
    group_of_.assign(static_cast<std::size_t>(d_), -1);
    for (std::size_t a = 0; a < groups_.size(); ++a) {
        for (Index i : groups_[a]) {
            auto& slot = group_of_[static_cast<std::size_t>(i)];
            if (slot != -1) throw std::invalid_argument("GroupPartition: groups are not disjoint");
            slot = static_cast<Index>(a);
        }
    }
}

GroupPartition GroupPartition::contiguous(const std::vector<Index>& sizes) {
    std::vector<std::vector<Index>> groups;
    Index next = 0;
    for (Index size : sizes) {
        if (size <= 0) throw std::invalid_argument("GroupPartition: group sizes must be positive");
        std::vector<Index> g(static_cast<std::size_t>(size));
        for (auto& i : g) i = next++;
        groups.push_back(std::move(g));
    }
    return GroupPartition(std::move(groups));
}

GroupPartition GroupPartition::equal(Index d, Index num_groups) {
    if (num_groups < 2 || d < num_groups) throw std::invalid_argument("GroupPartition: need 2 <= L <= d");
    std::vector<Index> sizes(static_cast<std::size_t>(num_groups), d / num_groups);
    for (Index a = 0; a < d % num_groups; ++a) ++sizes[static_cast<std::size_t>(a)];
    return contiguous(sizes);
}

std::vector<std::pair<Index, Index>> GroupPartition::cross_pairs() const {
    std::vector<std::pair<Index, Index>> out;
    for (Index j = 0; j < d_; ++j) {
        for (Index k = j + 1; k < d_; ++k) {
            if (!same_group(j, k)) out.emplace_back(j, k);
        }
    }
    return out;
}

InterBlockIndex InterBlockIndex::make(Index j, Index k, const GroupPartition& p) {
    if (j < 0 || k < 0 || j >= p.dim() || k >= p.dim()) throw std::out_of_range("InterBlockIndex: index out of range");
    if (p.same_group(j, k)) throw std::invalid_argument("InterBlockIndex: j and k are in the same group");
    return InterBlockIndex{j, k, p.group_of(j), p.group_of(k)};
}

MatrixXd block_diagonal_inverse(const MatrixXd& blocked, const GroupPartition& p) {
    if (blocked.rows() != p.dim() || blocked.cols() != p.dim()) {
        throw DimensionError("block_diagonal_inverse: dimension mismatch");
    }
    MatrixXd out = MatrixXd::Zero(p.dim(), p.dim());
    for (const auto& g : p.groups()) {
        const auto n = static_cast<Index>(g.size());
        MatrixXd block(n, n);
        for (Index c = 0; c < n; ++c) {
            for (Index r = 0; r < n; ++r) block(r, c) = blocked(g[r], g[c]);
        }
        Eigen::LLT<MatrixXd> llt(block);
        if (llt.info() != Eigen::Success) throw NumericalError("block_diagonal_inverse: singular diagonal block");
        const MatrixXd inv = llt.solve(MatrixXd::Identity(n, n));
        for (Index c = 0; c < n; ++c) {
            for (Index r = 0; r < n; ++r) out(g[r], g[c]) = inv(r, c);
        }
    }
    return out;
}

SymmetricMatrix theta_from_omega(const SymmetricMatrix& omega, const SymmetricMatrix& sigma, const GroupPartition& p) {
    if (omega.dim() != sigma.dim() || sigma.dim() != p.dim()) {
        throw DimensionError("theta_from_omega: dimension mismatch");
    }
    const MatrixXd nuisance = block_diagonal_inverse(block_diagonal(sigma.dense(), p), p);
    // nuisance is exactly zero off the diagonal blocks, so the cross-group
    // entries of the difference equal those of omega bit for bit.
    return SymmetricMatrix::symmetrized(omega.dense() - nuisance);
}

}  // namespace isa
