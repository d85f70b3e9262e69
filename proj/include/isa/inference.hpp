#pragma once

#include "isa/clime.hpp"
#include "isa/core_types.hpp"
#include "isa/covariance.hpp"
#include "isa/strings_solver.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

namespace isa {

/// Floor applied to variance estimates; hitting it is flagged, not fatal.
inline constexpr double kVarianceFloor = 1e-12;

struct SampleSplit {
    MatrixXd first;
    MatrixXd second;
};

/// Equal halves of `data`. Without shuffling the first n rows form the first
/// half; with shuffling rows are permuted by `seed` first.
SampleSplit split_sample(const MatrixXd& data, std::uint64_t seed, bool shuffle);

struct LeadingRemainder {
    MatrixXd leading;
    MatrixXd remainder;
};

struct InferenceResult {
    MatrixXd theta_u;
    /// Keyed by (j, k) with j in the lower-numbered group.
    std::map<InterBlockIndex, double> xi_hat_sq;
    Index n_split = 0;
    double alpha = 0.05;
    double lambda = 0.0;
    double lambda_prime = 0.0;
    /// Number of variance entries raised to kVarianceFloor.
    Index clamp_warnings = 0;
    GroupPartition partition;
    std::optional<LeadingRemainder> leading_remainder;
};

struct EdgeInference {
    InterBlockIndex index;
    double estimate = 0.0;
    double std_err = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double z_stat = 0.0;
    bool reject = false;
};

struct VarianceEstimate {
    std::map<InterBlockIndex, double> xi_hat_sq;
    Index clamp_warnings = 0;
};

/// Block-diagonal part of cov.full without the ridge (the blocked matrix
/// minus epsilon * I).
MatrixXd unperturbed_blocked(const CovariancePair& cov);

/// theta_hat - M (S theta_hat S_G + S - S_G) P^T with S, S_G from cov1.
MatrixXd debias_matrix(const MatrixXd& theta_hat, const CovariancePair& cov1, const MatrixXd& m, const MatrixXd& p);

/// De-biased estimate bundled with the split size; variances are filled by
/// variance_estimate.
InferenceResult debias(const StringsFit& fit, const CovariancePair& cov1, const ClimeSolution& m,
                       const ClimeSolution& p);

/**
 * Plug-in asymptotic variance for every inter-group pair (j, k) with j in a
 * lower-numbered group than k. The nuisance block kept in the last term is
 * the block of k's group. Values below kVarianceFloor are raised to it and
 * counted.
 */
VarianceEstimate variance_estimate(const MatrixXd& theta_hat, const MatrixXd& sigma, const MatrixXd& sigma_g,
                                   const MatrixXd& m, const MatrixXd& p, const GroupPartition& partition);

/// Single-pair version of the same formula.
double variance_formula(const MatrixXd& theta, const MatrixXd& sigma, const MatrixXd& sigma_g, const MatrixXd& m,
                        const MatrixXd& p, const GroupPartition& partition, Index j, Index k);

/// CI and two-sided test for one entry.
EdgeInference edge_inference(const InferenceResult& result, const InterBlockIndex& index, double alpha);

/// All inter-group entries, ordered by (j, k).
std::vector<EdgeInference> all_edges(const InferenceResult& result, double alpha);

/// Entries with |theta_u| > quantile(1 - 4 alpha / d^2) * xi / sqrt(n).
std::set<InterBlockIndex> bonferroni_select(const InferenceResult& result, double alpha);

/// Decomposition of theta_u - theta_star into the leading and remainder terms
/// given population quantities.
LeadingRemainder leading_remainder(const MatrixXd& theta_hat, const MatrixXd& sigma_hat, const MatrixXd& sigma_g_hat,
                                   const MatrixXd& m, const MatrixXd& p, const MatrixXd& sigma_star,
                                   const MatrixXd& sigma_g_star, const MatrixXd& theta_star);

struct PipelineConfig {
    /// Fixed lambda; ignored when `lambda_grid` is non-empty.
    double lambda = 0.0;
    /// Candidate lambdas chosen by validation loss on `validation_data`.
    std::vector<double> lambda_grid;
    std::optional<MatrixXd> validation_data;
    /// Non-positive selects 0.5 sqrt(log d / n).
    double lambda_prime = 0.0;
    AdmmConfig admm;
    double alpha = 0.05;
    bool shuffle = false;
    std::uint64_t seed = 0;
    bool center = false;
    bool use_kendall = false;
};

struct PipelineOutput {
    InferenceResult result;
    StringsFit fit;
    std::optional<LambdaSelection> selection;
    ClimeSolution m;
    ClimeSolution p;
    CovariancePair cov1;
    CovariancePair cov2;
};

double default_lambda_prime(Index d, Index n);

/// Split, estimate on the first half, build M and P on the second, de-bias,
/// and estimate variances.
PipelineOutput run_untangle_and_chord(const MatrixXd& data, const GroupPartition& partition,
                                      const PipelineConfig& cfg);

}  // namespace isa
