#include "isa/inference.hpp"

#include "isa/normal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace isa {

SampleSplit split_sample(const MatrixXd& data, std::uint64_t seed, bool shuffle) {
    if (data.rows() % 2 != 0) throw std::invalid_argument("split_sample: row count must be even");
    if (data.rows() == 0) throw std::invalid_argument("split_sample: no rows");
    const Index n = data.rows() / 2;
    std::vector<Index> order(static_cast<std::size_t>(data.rows()));
    std::iota(order.begin(), order.end(), Index{0});
    if (shuffle) {
        std::mt19937_64 rng(seed);
        std::shuffle(order.begin(), order.end(), rng);
    }
    SampleSplit out{MatrixXd(n, data.cols()), MatrixXd(n, data.cols())};
    for (Index i = 0; i < n; ++i) {
        out.first.row(i) = data.row(order[static_cast<std::size_t>(i)]);
        out.second.row(i) = data.row(order[static_cast<std::size_t>(n + i)]);
    }
    return out;
}

MatrixXd unperturbed_blocked(const CovariancePair& cov) {
    MatrixXd out = cov.blocked;
    if (cov.perturbation_applied) out.diagonal().array() -= cov.epsilon;
    return out;
}

MatrixXd debias_matrix(const MatrixXd& theta_hat, const CovariancePair& cov1, const MatrixXd& m, const MatrixXd& p) {
    const Index d = theta_hat.rows();
    if (cov1.full.dim() != d || m.rows() != d || m.cols() != d || p.rows() != d || p.cols() != d) {
        throw DimensionError("debias: dimension mismatch");
    }
    const MatrixXd& s = cov1.full;
    const MatrixXd sg = unperturbed_blocked(cov1);
    const MatrixXd residual = s * theta_hat * sg + s - sg;
    return theta_hat - m * residual * p.transpose();
}

InferenceResult debias(const StringsFit& fit, const CovariancePair& cov1, const ClimeSolution& m,
                       const ClimeSolution& p) {
    InferenceResult out;
    out.theta_u = debias_matrix(fit.theta_hat, cov1, m.m, p.m);
    out.n_split = cov1.n;
    out.lambda = fit.lambda;
    out.lambda_prime = m.lambda_prime;
    return out;
}

namespace {

// Block of group `g` kept, everything else zero.
MatrixXd single_block(const MatrixXd& sigma_g, const GroupPartition& partition, Index g) {
    MatrixXd out = MatrixXd::Zero(sigma_g.rows(), sigma_g.cols());
    for (Index c : partition.group(g)) {
        for (Index r : partition.group(g)) out(r, c) = sigma_g(r, c);
    }
    return out;
}

}  // namespace

double variance_formula(const MatrixXd& theta, const MatrixXd& sigma, const MatrixXd& sigma_g, const MatrixXd& m,
                        const MatrixXd& p, const GroupPartition& partition, Index j, Index k) {
    const Index d = theta.rows();
    const MatrixXd eye = MatrixXd::Identity(d, d);
    const VectorXd mj = m.row(j).transpose();
    const VectorXd pk = p.row(k).transpose();
    const MatrixXd kept = single_block(sigma_g, partition, partition.group_of(k));
    const MatrixXd left = eye - sigma * theta;
    const double t1 = mj.dot(sigma * mj) * pk.dot((eye + sigma_g * theta) * sigma_g * pk);
    const double t2 = std::pow(mj.dot(sigma_g * pk), 2);
    const double t3 = std::pow(mj.dot(sigma * pk), 2);
    const double t4 = mj.dot(left * kept * left.transpose() * mj) * pk.dot(sigma_g * pk);
    return t1 + t2 - t3 - t4;
}

VarianceEstimate variance_estimate(const MatrixXd& theta_hat, const MatrixXd& sigma, const MatrixXd& sigma_g,
                                   const MatrixXd& m, const MatrixXd& p, const GroupPartition& partition) {
    const Index d = theta_hat.rows();
    if (sigma.rows() != d || sigma_g.rows() != d || m.rows() != d || p.rows() != d || partition.dim() != d) {
        throw DimensionError("variance_estimate: dimension mismatch");
    }
    const MatrixXd eye = MatrixXd::Identity(d, d);
    const VectorXd m_sigma_m = (m * sigma).cwiseProduct(m).rowwise().sum();
    const VectorXd p_inner = (p * ((eye + sigma_g * theta_hat) * sigma_g)).cwiseProduct(p).rowwise().sum();
    const VectorXd p_sg_p = (p * sigma_g).cwiseProduct(p).rowwise().sum();
    const MatrixXd m_sg_p = m * sigma_g * p.transpose();
    const MatrixXd m_s_p = m * sigma * p.transpose();
    const MatrixXd n_mat = m * (eye - sigma * theta_hat);

    // Last-term quadratic forms, one column per kept group.
    MatrixXd kept_forms(d, partition.num_groups());
    for (Index g = 0; g < partition.num_groups(); ++g) {
        const MatrixXd kept = single_block(sigma_g, partition, g);
        kept_forms.col(g) = (n_mat * kept).cwiseProduct(n_mat).rowwise().sum();
    }

    VarianceEstimate out;
    for (Index j = 0; j < d; ++j) {
        for (Index k = 0; k < d; ++k) {
            const Index gj = partition.group_of(j), gk = partition.group_of(k);
            if (gj >= gk) continue;
            double v = m_sigma_m(j) * p_inner(k) + m_sg_p(j, k) * m_sg_p(j, k) - m_s_p(j, k) * m_s_p(j, k) -
                       kept_forms(j, gk) * p_sg_p(k);
            if (!(v >= kVarianceFloor)) {
                v = kVarianceFloor;
                ++out.clamp_warnings;
            }
            out.xi_hat_sq.emplace(InterBlockIndex{j, k, gj, gk}, v);
        }
    }
    return out;
}

EdgeInference edge_inference(const InferenceResult& result, const InterBlockIndex& index, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("edge_inference: alpha must lie in (0, 1)");
    const auto it = result.xi_hat_sq.find(index);
    if (it == result.xi_hat_sq.end()) throw std::out_of_range("edge_inference: no variance for this index");
    const double xi = std::sqrt(it->second);
    const double sqrt_n = std::sqrt(static_cast<double>(result.n_split));
    const double q = normal_quantile(1.0 - alpha / 2.0);
    EdgeInference e;
    e.index = it->first;
    e.estimate = result.theta_u(index.j, index.k);
    e.std_err = xi / sqrt_n;
    const double delta = e.std_err * q;
    e.ci_low = e.estimate - delta;
    e.ci_high = e.estimate + delta;
    e.z_stat = sqrt_n * e.estimate / xi;
    e.reject = std::abs(e.z_stat) > q;
    return e;
}

std::vector<EdgeInference> all_edges(const InferenceResult& result, double alpha) {
    std::vector<EdgeInference> out;
    out.reserve(result.xi_hat_sq.size());
    for (const auto& [index, v] : result.xi_hat_sq) out.push_back(edge_inference(result, index, alpha));
    return out;
}

std::set<InterBlockIndex> bonferroni_select(const InferenceResult& result, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("bonferroni_select: alpha must lie in (0, 1)");
    const auto d = static_cast<double>(result.theta_u.rows());
    const double tail = 4.0 * alpha / (d * d);
    if (!(tail < 1.0)) throw std::invalid_argument("bonferroni_select: 4 alpha / d^2 must be below 1");
    const double q = normal_quantile(1.0 - tail);
    const double sqrt_n = std::sqrt(static_cast<double>(result.n_split));
    std::set<InterBlockIndex> out;
    for (const auto& [index, v] : result.xi_hat_sq) {
        if (std::abs(result.theta_u(index.j, index.k)) > q * std::sqrt(v) / sqrt_n) out.insert(index);
    }
    return out;
}

LeadingRemainder leading_remainder(const MatrixXd& theta_hat, const MatrixXd& sigma_hat, const MatrixXd& sigma_g_hat,
                                   const MatrixXd& m, const MatrixXd& p, const MatrixXd& sigma_star,
                                   const MatrixXd& sigma_g_star, const MatrixXd& theta_star) {
    const Index d = theta_hat.rows();
    const MatrixXd eye = MatrixXd::Identity(d, d);
    const MatrixXd ds = sigma_hat - sigma_star;
    const MatrixXd dg = sigma_g_hat - sigma_g_star;
    LeadingRemainder out;
    out.leading = -m * (ds * (eye + theta_star * sigma_g_star) - (eye - sigma_star * theta_star) * dg) * p.transpose();
    out.remainder = -m * ds * theta_star * dg * p.transpose() + (theta_hat - theta_star) -
                    m * sigma_hat * (theta_hat - theta_star) * sigma_g_hat * p.transpose();
    return out;
}

double default_lambda_prime(Index d, Index n) {
    return 0.5 * std::sqrt(std::log(static_cast<double>(d)) / static_cast<double>(n));
}

PipelineOutput run_untangle_and_chord(const MatrixXd& data, const GroupPartition& partition,
                                      const PipelineConfig& cfg) {
    if (data.cols() != partition.dim()) throw DimensionError("run_untangle_and_chord: data width != partition size");
    if (data.rows() < 4) throw std::invalid_argument("run_untangle_and_chord: need at least 4 rows");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw std::invalid_argument("run_untangle_and_chord: bad alpha");
    const SampleSplit halves = split_sample(data, cfg.seed, cfg.shuffle);
    const Index n = halves.first.rows();
    const Index d = partition.dim();

    auto estimate = [&](const MatrixXd& x) {
        return cfg.use_kendall ? kendall_covariance(x) : sample_covariance(x, cfg.center);
    };

    PipelineOutput out;
    out.cov1 = blocked_covariance(estimate(halves.first), partition, n);
    out.cov2 = blocked_covariance(estimate(halves.second), partition, n);

    if (!cfg.lambda_grid.empty()) {
        if (!cfg.validation_data) throw std::invalid_argument("run_untangle_and_chord: a lambda grid needs validation data");
        const MatrixXd& val = *cfg.validation_data;
        if (val.cols() != d) throw DimensionError("run_untangle_and_chord: validation width != partition size");
        const CovariancePair cov_val = blocked_covariance(estimate(val), partition, val.rows());
        out.selection = select_lambda(out.cov1, cov_val, cfg.lambda_grid, cfg.admm);
        out.fit = out.selection->chosen();
    } else {
        out.fit = fit_strings(out.cov1, cfg.lambda, cfg.admm);
    }

    const double lambda_prime = cfg.lambda_prime > 0.0 ? cfg.lambda_prime : default_lambda_prime(d, n);
    const SymmetricMatrix target_m = out.cov2.full;
    const SymmetricMatrix target_p = SymmetricMatrix::symmetrized(unperturbed_blocked(out.cov2));
    out.m = solve_clime_rows(target_m, lambda_prime);
    out.p = solve_clime_rows(target_p, lambda_prime, block_mask(partition));

    out.result = debias(out.fit, out.cov1, out.m, out.p);
    out.result.alpha = cfg.alpha;
    out.result.partition = partition;
    VarianceEstimate var = variance_estimate(out.fit.theta_hat.dense(), out.cov1.full.dense(),
                                             unperturbed_blocked(out.cov1), out.m.m, out.p.m, partition);
    out.result.xi_hat_sq = std::move(var.xi_hat_sq);
    out.result.clamp_warnings = var.clamp_warnings;
    return out;
}

}  // namespace isa
