#include "isa/simulation.hpp"

#include "isa/covariance.hpp"
#include "isa/normal.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

namespace isa {

void GeneratorSpec::validate() const {
    if (num_groups < 2) throw std::invalid_argument("GeneratorSpec: need at least two groups");
    if (d < 2 * num_groups) throw std::invalid_argument("GeneratorSpec: d too small for the number of groups");
    if (value == 0.0 || !std::isfinite(value)) throw std::invalid_argument("GeneratorSpec: value must be nonzero");
    if (s < 0) throw std::invalid_argument("GeneratorSpec: s must be nonnegative");
    const double target = resolved_condition_target();
    if (!(target > 1.0)) throw std::invalid_argument("GeneratorSpec: condition number target must exceed 1");
    const GroupPartition p = GroupPartition::equal(d, num_groups);
    for (Index a = 0; a < num_groups; ++a) {
        for (Index b = a + 1; b < num_groups; ++b) {
            const auto cells = static_cast<Index>(p.group(a).size() * p.group(b).size());
            if (s > cells) throw std::invalid_argument("GeneratorSpec: s exceeds the number of inter-block cells");
        }
    }
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

IsaModel generate_model(const GeneratorSpec& spec) {
    spec.validate();
    const Index d = spec.d;
    const GroupPartition partition = GroupPartition::equal(d, spec.num_groups);
    std::mt19937_64 rng = make_stream(spec.seed, kModelStream, 0);

    MatrixXd raw = MatrixXd::Zero(d, d);
    for (const auto& g : partition.groups()) {
        for (Index c : g) {
            for (Index r : g) raw(r, c) = 1.0;
        }
    }
    std::vector<std::pair<Index, Index>> support;
    for (Index a = 0; a < partition.num_groups(); ++a) {
        for (Index b = a + 1; b < partition.num_groups(); ++b) {
            const auto& ga = partition.group(a);
            const auto& gb = partition.group(b);
            const std::size_t cells = ga.size() * gb.size();
            // Partial Fisher-Yates over the cells of the (a, b) block.
            std::vector<std::size_t> idx(cells);
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            for (std::size_t i = 0; i < static_cast<std::size_t>(spec.s); ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, cells - 1);
                std::swap(idx[i], idx[pick(rng)]);
                const Index j = ga[idx[i] / gb.size()];
                const Index k = gb[idx[i] % gb.size()];
                raw(j, k) = spec.value;
                raw(k, j) = spec.value;
                support.emplace_back(std::min(j, k), std::max(j, k));
            }
        }
    }
    std::sort(support.begin(), support.end());

    const VectorXd eig = Eigen::SelfAdjointEigenSolver<MatrixXd>(raw, Eigen::EigenvaluesOnly).eigenvalues();
    const double lo = eig(0), hi = eig(d - 1);
    const double target = spec.resolved_condition_target();
    if (!(hi > lo)) throw NumericalError("generate_model: raw matrix has a single eigenvalue");
    const double delta = (hi - target * lo) / (target - 1.0);
    if (!(lo + delta > 0.0)) throw NumericalError("generate_model: condition number target is unreachable");
    raw.diagonal().array() += delta;

    const VectorXd scale = raw.diagonal().array().rsqrt();
    MatrixXd omega = scale.asDiagonal() * raw * scale.asDiagonal();
    omega.diagonal().setOnes();

    IsaModel model;
    model.partition = partition;
    model.s = spec.s;
    model.support = std::move(support);
    model.omega = SymmetricMatrix::symmetrized(omega);
    Eigen::LLT<MatrixXd> llt(model.omega.dense());
    if (llt.info() != Eigen::Success) throw NumericalError("generate_model: precision matrix is not positive definite");
    model.sigma = SymmetricMatrix::symmetrized(llt.solve(MatrixXd::Identity(d, d)));
    model.theta = theta_from_omega(model.omega, model.sigma, partition);
    model.condition_raw = (hi + delta) / (lo + delta);
    const VectorXd std_eig =
        Eigen::SelfAdjointEigenSolver<MatrixXd>(model.omega.dense(), Eigen::EigenvaluesOnly).eigenvalues();
    model.condition_standardized = std_eig(d - 1) / std_eig(0);
    return model;
}

MatrixXd sample_gaussian(const IsaModel& model, Index n, std::mt19937_64& rng) {
    if (n < 1) throw std::invalid_argument("sample_gaussian: n must be positive");
    const Index d = model.sigma.dim();
    Eigen::LLT<MatrixXd> llt(model.sigma.dense());
    if (llt.info() != Eigen::Success) throw NumericalError("sample_gaussian: Cholesky of sigma failed");
    std::normal_distribution<double> normal(0.0, 1.0);
    MatrixXd z(n, d);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < d; ++j) z(i, j) = normal(rng);
    }
    return z * llt.matrixU();
}

MatrixXd sample_gaussian(const IsaModel& model, Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return sample_gaussian(model, n, rng);
}

RecoveryMetrics recovery_metrics(const SymmetricMatrix& theta_hat, const IsaModel& model, double threshold) {
    if (!(threshold > 0.0)) throw std::invalid_argument("recovery_metrics: threshold must be positive");
    if (theta_hat.dim() != model.partition.dim()) throw DimensionError("recovery_metrics: dimension mismatch");
    const std::set<std::pair<Index, Index>> truth(model.support.begin(), model.support.end());
    RecoveryMetrics r;
    for (const auto& [j, k] : model.partition.cross_pairs()) {
        const bool predicted = std::abs(theta_hat(j, k)) > threshold;
        const bool actual = truth.count({j, k}) > 0;
        if (predicted && actual) ++r.tp;
        if (predicted && !actual) ++r.fp;
        if (!predicted && actual) ++r.fn;
    }
    r.precision = r.tp + r.fp > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp) : 0.0;
    r.recall = r.tp + r.fn > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
    r.f_score = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

Estimator strings_estimator(std::vector<double> grid, AdmmConfig cfg, bool use_kendall) {
    return [grid = std::move(grid), cfg, use_kendall](const MatrixXd& train, const MatrixXd& val,
                                                      const GroupPartition& p) {
        auto estimate = [&](const MatrixXd& x) {
            return use_kendall ? kendall_covariance(x) : sample_covariance(x, false);
        };
        const CovariancePair cov_train = blocked_covariance(estimate(train), p, train.rows());
        const CovariancePair cov_val = blocked_covariance(estimate(val), p, val.rows());
        const std::vector<double> g = grid.empty() ? default_lambda_grid(p.dim(), train.rows()) : grid;
        return select_lambda(cov_train, cov_val, g, cfg).chosen().theta_hat;
    };
}

void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, count));
    if (jobs == 1) {
        for (int r = 0; r < count; ++r) fn(r);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) {
        pool.emplace_back([&] {
            for (int r = next++; r < count; r = next++) fn(r);
        });
    }
    for (auto& th : pool) th.join();
}

namespace {

MetricSummary summarize(const std::vector<double>& xs) {
    MetricSummary m;
    if (xs.empty()) return m;
    m.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - m.mean) * (x - m.mean);
        m.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return m;
}

}  // namespace

BenchmarkTable run_benchmark(const BenchmarkConfig& cfg) {
    if (cfg.replications < 1) throw std::invalid_argument("run_benchmark: need at least one replication");
    cfg.spec.validate();
    cfg.admm.validate();
    const Estimator estimator = cfg.estimator ? cfg.estimator : strings_estimator(cfg.grid, cfg.admm, cfg.use_kendall);

    BenchmarkTable table;
    table.d = cfg.spec.d;
    table.s = cfg.spec.s;
    table.replications = cfg.replications;
    table.per_replication.resize(static_cast<std::size_t>(cfg.replications));

    parallel_for(cfg.replications, cfg.jobs, [&](int r) {
        auto& rep = table.per_replication[static_cast<std::size_t>(r)];
        try {
            GeneratorSpec spec = cfg.spec;
            std::mt19937_64 model_rng = make_stream(cfg.seed, kModelStream, static_cast<std::uint64_t>(r));
            spec.seed = model_rng();
            const IsaModel model = generate_model(spec);
            std::mt19937_64 train_rng = make_stream(cfg.seed, kTrainStream, static_cast<std::uint64_t>(r));
            std::mt19937_64 val_rng = make_stream(cfg.seed, kValidationStream, static_cast<std::uint64_t>(r));
            MatrixXd train = sample_gaussian(model, cfg.n_train, train_rng);
            MatrixXd val = sample_gaussian(model, cfg.n_val, val_rng);
            if (cfg.marginal_transform) {
                train = train.unaryExpr(cfg.marginal_transform);
                val = val.unaryExpr(cfg.marginal_transform);
            }
            const SymmetricMatrix theta_hat = estimator(train, val, model.partition);
            rep.metrics = recovery_metrics(theta_hat, model);
            rep.theta_error_fro = (theta_hat.dense() - model.theta.dense()).norm();
            rep.ok = true;
        } catch (const std::exception& e) {
            rep.ok = false;
            rep.error = e.what();
        }
    });

    std::vector<double> prec, rec, f;
    for (const auto& rep : table.per_replication) {
        if (!rep.ok) {
            ++table.failed;
            continue;
        }
        prec.push_back(rep.metrics.precision);
        rec.push_back(rep.metrics.recall);
        f.push_back(rep.metrics.f_score);
    }
    table.precision = summarize(prec);
    table.recall = summarize(rec);
    table.f_score = summarize(f);
    return table;
}

CoverageReport run_coverage_study(const CoverageConfig& cfg) {
    if (cfg.replications < 2) throw std::invalid_argument("run_coverage_study: need at least two replications");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw std::invalid_argument("run_coverage_study: alpha must lie in (0, 1)");
    cfg.admm.validate();
    const IsaModel model = generate_model(cfg.spec);
    const GroupPartition& p = model.partition;
    const auto pairs = p.cross_pairs();
    const std::set<std::pair<Index, Index>> support(model.support.begin(), model.support.end());
    const double sqrt_n = std::sqrt(static_cast<double>(cfg.n_per_half));
    const double q = normal_quantile(1.0 - cfg.alpha / 2.0);

    struct RepResult {
        bool ok = false;
        std::vector<char> hit;
        std::vector<double> length;
        std::vector<double> z;
        Index clamps = 0;
    };
    std::vector<RepResult> reps(static_cast<std::size_t>(cfg.replications));

    parallel_for(cfg.replications, cfg.jobs, [&](int r) {
        RepResult& out = reps[static_cast<std::size_t>(r)];
        try {
            std::mt19937_64 rng = make_stream(cfg.seed, kInferenceStream, static_cast<std::uint64_t>(r));
            const MatrixXd data = sample_gaussian(model, 2 * cfg.n_per_half, rng);
            PipelineConfig pc;
            pc.admm = cfg.admm;
            pc.alpha = cfg.alpha;
            pc.lambda_prime = cfg.lambda_prime;
            if (cfg.lambda > 0.0) {
                pc.lambda = cfg.lambda;
            } else {
                std::mt19937_64 val_rng = make_stream(cfg.seed, kValidationStream, static_cast<std::uint64_t>(r));
                pc.validation_data = sample_gaussian(model, cfg.n_val, val_rng);
                pc.lambda_grid = cfg.grid.empty() ? default_lambda_grid(p.dim(), cfg.n_per_half) : cfg.grid;
            }
            const PipelineOutput po = run_untangle_and_chord(data, p, pc);
            out.clamps = po.result.clamp_warnings;
            out.hit.resize(pairs.size());
            out.length.resize(pairs.size());
            out.z.resize(pairs.size());
            for (std::size_t i = 0; i < pairs.size(); ++i) {
                auto [j, k] = pairs[i];
                if (p.group_of(j) > p.group_of(k)) std::swap(j, k);
                const double xi = std::sqrt(po.result.xi_hat_sq.at(InterBlockIndex{j, k, p.group_of(j), p.group_of(k)}));
                const double est = po.result.theta_u(j, k);
                const double truth = model.theta(j, k);
                const double half = q * xi / sqrt_n;
                out.hit[i] = std::abs(est - truth) <= half;
                out.length[i] = 2.0 * half;
                out.z[i] = sqrt_n * (est - truth) / xi;
            }
            out.ok = true;
        } catch (const std::exception&) {
            out.ok = false;
        }
    });

    CoverageReport report;
    report.replications = cfg.replications;
    std::vector<double> hits(pairs.size(), 0.0);
    double len_s = 0.0, len_sc = 0.0;
    int ok = 0;
    for (const auto& rep : reps) {
        if (!rep.ok) {
            ++report.failed;
            continue;
        }
        ++ok;
        report.clamp_warnings += rep.clamps;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            hits[i] += rep.hit[i] ? 1.0 : 0.0;
            (support.count(pairs[i]) ? len_s : len_sc) += rep.length[i];
        }
    }
    if (ok == 0) throw NumericalError("run_coverage_study: every replication failed");

    double cov_s = 0.0, cov_sc = 0.0;
    std::size_t count_s = 0, count_sc = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double c = hits[i] / ok;
        report.per_entry_cov[pairs[i]] = c;
        if (support.count(pairs[i])) {
            cov_s += c;
            ++count_s;
        } else {
            cov_sc += c;
            ++count_sc;
        }
    }
    report.avgcov_s = count_s ? cov_s / static_cast<double>(count_s) : 0.0;
    report.avgcov_sc = count_sc ? cov_sc / static_cast<double>(count_sc) : 0.0;
    report.avglen_s = count_s ? len_s / static_cast<double>(count_s * static_cast<std::size_t>(ok)) : 0.0;
    report.avglen_sc = count_sc ? len_sc / static_cast<double>(count_sc * static_cast<std::size_t>(ok)) : 0.0;

    for (const auto& entry : cfg.tracked) {
        const auto it = std::find(pairs.begin(), pairs.end(), std::make_pair(std::min(entry.first, entry.second),
                                                                             std::max(entry.first, entry.second)));
        if (it == pairs.end()) throw std::invalid_argument("run_coverage_study: tracked entry is not inter-group");
        const auto i = static_cast<std::size_t>(it - pairs.begin());
        auto& series = report.z_scores[*it];
        for (std::size_t r = 0; r < reps.size(); ++r) {
            if (reps[r].ok) series.emplace_back(static_cast<int>(r), reps[r].z[i]);
        }
    }
    return report;
}

}  // namespace isa
