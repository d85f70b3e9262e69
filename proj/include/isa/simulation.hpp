#pragma once

#include "isa/core_types.hpp"
#include "isa/inference.hpp"
#include "isa/strings_solver.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace isa {

struct GeneratorSpec {
    Index d = 30;
    /// Nonzeros per pair of groups.
    Index s = 10;
    double value = 0.5;
    /// Non-positive means "use d".
    double condition_number_target = 0.0;
    Index num_groups = 2;
    std::uint64_t seed = 0;

    double resolved_condition_target() const {
        return condition_number_target > 0.0 ? condition_number_target : static_cast<double>(d);
    }
    void validate() const;
};

/**
 * Independent RNG stream for (seed, stream, index). Replication r of a run
 * always draws from the same stream regardless of scheduling.
 */
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

/// Stream tags used by the harnesses.
enum StreamTag : std::uint64_t { kModelStream = 1, kTrainStream = 2, kValidationStream = 3, kInferenceStream = 4 };

/// Two or more groups with all-ones intra blocks, `s` inter-block entries
/// per group pair set to `value`, diagonal shift to the target condition
/// number, then unit-diagonal standardization.
IsaModel generate_model(const GeneratorSpec& spec);

/// n rows drawn i.i.d. from N(0, model.sigma).
MatrixXd sample_gaussian(const IsaModel& model, Index n, std::uint64_t seed);
MatrixXd sample_gaussian(const IsaModel& model, Index n, std::mt19937_64& rng);

struct RecoveryMetrics {
    Index tp = 0;
    Index fp = 0;
    Index fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f_score = 0.0;
};

/// Support recovery on the inter-group entries: |theta_hat_jk| > threshold
/// is a predicted edge.
RecoveryMetrics recovery_metrics(const SymmetricMatrix& theta_hat, const IsaModel& model,
                                 double threshold = kSupportThreshold);

/// Pluggable estimator: (train, validation, partition) -> theta_hat.
using Estimator = std::function<SymmetricMatrix(const MatrixXd&, const MatrixXd&, const GroupPartition&)>;

/// STRINGS with validation-selected lambda from `grid` (empty grid means the
/// default grid for the training size).
Estimator strings_estimator(std::vector<double> grid, AdmmConfig cfg, bool use_kendall = false);

struct MetricSummary {
    double mean = 0.0;
    /// Across-replication standard deviation.
    double sd = 0.0;
};

struct BenchmarkConfig {
    GeneratorSpec spec;
    Index n_train = 100;
    Index n_val = 100;
    std::vector<double> grid;
    AdmmConfig admm;
    int replications = 100;
    std::uint64_t seed = 0;
    int jobs = 1;
    /// Applied to both samples before estimation (e.g. x -> x^3).
    std::function<double(double)> marginal_transform;
    bool use_kendall = false;
    Estimator estimator;  // empty means STRINGS
};

struct BenchmarkReplication {
    bool ok = false;
    std::string error;
    RecoveryMetrics metrics;
    double theta_error_fro = 0.0;
};

struct BenchmarkTable {
    Index d = 0;
    Index s = 0;
    int replications = 0;
    int failed = 0;
    MetricSummary precision, recall, f_score;
    std::vector<BenchmarkReplication> per_replication;
};

BenchmarkTable run_benchmark(const BenchmarkConfig& cfg);

struct CoverageConfig {
    GeneratorSpec spec;
    Index n_per_half = 100;
    double alpha = 0.05;
    int replications = 100;
    std::uint64_t seed = 0;
    AdmmConfig admm;
    /// Lambda chosen by validation loss on an extra sample of n_val rows
    /// over `grid` (empty = default grid). A positive `lambda` skips selection.
    std::vector<double> grid;
    Index n_val = 100;
    double lambda = 0.0;
    double lambda_prime = 0.0;
    /// Inter-group entries whose standardized errors are exported.
    std::vector<std::pair<Index, Index>> tracked;
    int jobs = 1;
};

struct CoverageReport {
    double avgcov_s = 0.0;
    double avgcov_sc = 0.0;
    double avglen_s = 0.0;
    double avglen_sc = 0.0;
    /// Per-entry fraction of successful replications whose CI covered theta*.
    std::map<std::pair<Index, Index>, double> per_entry_cov;
    int replications = 0;
    int failed = 0;
    Index clamp_warnings = 0;
    /// tracked entry -> (replication, z) with z = sqrt(n)(theta_u - theta*)/xi.
    std::map<std::pair<Index, Index>, std::vector<std::pair<int, double>>> z_scores;
};

/// Model generated once from cfg.spec; each replication draws fresh data.
CoverageReport run_coverage_study(const CoverageConfig& cfg);

/// Runs fn(r) for r in [0, count) on `jobs` threads.
void parallel_for(int count, int jobs, const std::function<void(int)>& fn);

}  // namespace isa
