#include "doctest.h"
#include "oracles.hpp"

#include "isa/inference.hpp"
#include "isa/normal.hpp"
#include "isa/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace isa;

namespace {

CovariancePair population_pair(const IsaModel& model) {
    CovariancePair c;
    c.full = model.sigma;
    c.blocked = block_diagonal(model.sigma, model.partition);
    c.n = 1;
    return c;
}

}  // namespace

TEST_CASE("sample split") {
    MatrixXd x(4, 2);
    x << 1, 1, 2, 2, 3, 3, 4, 4;
    const SampleSplit s = split_sample(x, 0, false);
    CHECK(s.first == x.topRows(2));
    CHECK(s.second == x.bottomRows(2));

    MatrixXd big(10, 1);
    for (Index i = 0; i < 10; ++i) big(i, 0) = static_cast<double>(i);
    const SampleSplit a = split_sample(big, 42, true);
    const SampleSplit b = split_sample(big, 42, true);
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
    std::vector<double> all;
    for (Index i = 0; i < 5; ++i) {
        all.push_back(a.first(i, 0));
        all.push_back(a.second(i, 0));
    }
    std::sort(all.begin(), all.end());
    for (Index i = 0; i < 10; ++i) CHECK(all[static_cast<std::size_t>(i)] == static_cast<double>(i));

    CHECK_THROWS_AS(split_sample(MatrixXd::Zero(3, 2), 0, false), std::invalid_argument);
}

TEST_CASE("de-biasing") {
    GeneratorSpec spec;
    spec.d = 6;
    spec.s = 2;
    spec.seed = 4;
    const IsaModel model = generate_model(spec);
    const CovariancePair pop = population_pair(model);
    std::mt19937_64 rng(1);
    const MatrixXd m = oracle::random_symmetric(6, rng);
    const MatrixXd p = oracle::random_symmetric(6, rng);

    // Zero residual at the population: nothing to correct.
    CHECK(max_norm((debias_matrix(model.theta.dense(), pop, m, p) - model.theta.dense()).eval()) < 1e-12);

    const MatrixXd theta = oracle::random_symmetric(6, rng);
    const MatrixXd zero = MatrixXd::Zero(6, 6);
    CHECK(debias_matrix(theta, pop, zero, zero) == theta);

    // Hand instance with small integers.
    CovariancePair ints;
    MatrixXd s(4, 4);
    s << 2, 1, 0, 1, 1, 3, 1, 0, 0, 1, 2, 1, 1, 0, 1, 2;
    const GroupPartition g = GroupPartition::contiguous({2, 2});
    ints.full = SymmetricMatrix(s);
    ints.blocked = SymmetricMatrix::symmetrized(block_diagonal(s, g));
    MatrixXd t(4, 4), mi(4, 4), pi(4, 4);
    t << 1, 0, 1, 0, 0, 0, 0, 1, 1, 0, -1, 0, 0, 1, 0, 0;
    mi << 1, 2, 0, 0, 0, 1, 0, 1, 1, 0, 1, 0, 0, 0, 2, 1;
    pi << 1, 0, 0, 0, 1, 1, 0, 0, 0, 0, 1, 2, 0, 0, 0, 1;
    const MatrixXd sg = block_diagonal(s, g);
    MatrixXd expect = t;
    for (Index a = 0; a < 4; ++a) {
        for (Index b = 0; b < 4; ++b) {
            double acc = 0.0;
            for (Index u = 0; u < 4; ++u) {
                for (Index v = 0; v < 4; ++v) {
                    double r = s(u, v) - sg(u, v);
                    for (Index x = 0; x < 4; ++x) {
                        for (Index y = 0; y < 4; ++y) r += s(u, x) * t(x, y) * sg(y, v);
                    }
                    acc += mi(a, u) * r * pi(b, v);
                }
            }
            expect(a, b) -= acc;
        }
    }
    CHECK(max_norm((debias_matrix(t, ints, mi, pi) - expect).eval()) < 1e-12);
}

TEST_CASE("variance formula at identity inputs") {
    // Independent unit-variance groups: X_j X_k has variance 1, and that is
    // what the formula returns (the nuisance term vanishes for j in G1).
    const GroupPartition g = GroupPartition::contiguous({2, 2});
    const MatrixXd eye = MatrixXd::Identity(4, 4);
    const MatrixXd zero = MatrixXd::Zero(4, 4);
    CHECK(variance_formula(zero, eye, eye, eye, eye, g, 0, 2) == doctest::Approx(1.0));
    const VarianceEstimate v = variance_estimate(zero, eye, eye, eye, eye, g);
    CHECK(v.xi_hat_sq.size() == 4);
    CHECK(v.clamp_warnings == 0);
    for (const auto& [idx, val] : v.xi_hat_sq) CHECK(val == doctest::Approx(1.0));

    // A negative plug-in value is floored and counted. A large cross entry
    // in theta makes the nuisance term dominate: 1 - 4.
    MatrixXd theta = zero;
    theta(0, 2) = theta(2, 0) = 2.0;
    const double raw = variance_formula(theta, eye, eye, eye, eye, g, 0, 2);
    CHECK(raw == doctest::Approx(-3.0));
    const VarianceEstimate c = variance_estimate(theta, eye, eye, eye, eye, g);
    CHECK(c.clamp_warnings >= 1);
    for (const auto& [idx, val] : c.xi_hat_sq) CHECK(val >= kVarianceFloor);
}

TEST_CASE("variance formula equals the exact quadratic-form variance") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        GeneratorSpec spec;
        spec.d = 6;
        spec.s = 3;
        spec.seed = seed;
        const IsaModel model = generate_model(spec);
        const MatrixXd& sigma = model.sigma;
        const MatrixXd sg = block_diagonal(sigma, model.partition);
        const MatrixXd& theta = model.theta;
        const MatrixXd m = model.omega;
        const MatrixXd p = block_diagonal_inverse(sg, model.partition);
        const MatrixXd eye = MatrixXd::Identity(6, 6);
        const VarianceEstimate all = variance_estimate(theta, sigma, sg, m, p, model.partition);
        for (const auto& [idx, v] : all.xi_hat_sq) {
            const VectorXd mj = m.row(idx.j).transpose();
            const VectorXd pk = p.row(idx.k).transpose();
            const double exact = oracle::isserlis_variance(sigma, mj, (eye + theta * sg) * pk,
                                                           (eye - theta * sigma) * mj, pk,
                                                           model.partition.group(idx.col_group));
            CHECK(v == doctest::Approx(exact).epsilon(1e-10));
            CHECK(v == doctest::Approx(variance_formula(theta, sigma, sg, m, p, model.partition, idx.j, idx.k))
                           .epsilon(1e-12));
        }
    }
}

TEST_CASE("edge inference arithmetic") {
    InferenceResult r;
    r.theta_u = MatrixXd::Zero(4, 4);
    r.theta_u(0, 2) = 0.3;
    r.n_split = 100;
    const GroupPartition g = GroupPartition::contiguous({2, 2});
    for (const auto& [j, k] : g.cross_pairs()) r.xi_hat_sq[InterBlockIndex::make(j, k, g)] = 1.0;

    const EdgeInference e = edge_inference(r, InterBlockIndex::make(0, 2, g), 0.05);
    CHECK(e.z_stat == doctest::Approx(3.0));
    CHECK(e.reject);
    CHECK(e.ci_high - e.estimate == doctest::Approx(0.1 * 1.959964).epsilon(1e-6));

    const EdgeInference z = edge_inference(r, InterBlockIndex::make(1, 3, g), 0.05);
    CHECK(z.ci_low == -z.ci_high);
    CHECK_FALSE(z.reject);
    CHECK(all_edges(r, 0.05).size() == 4);
    CHECK_THROWS_AS(edge_inference(r, InterBlockIndex::make(0, 2, g), 1.0), std::invalid_argument);
}

TEST_CASE("bonferroni selection") {
    CHECK(1.0 - 4.0 * 0.05 / (172.0 * 172.0) == doctest::Approx(0.9999932).epsilon(1e-7));

    const GroupPartition g = GroupPartition::contiguous({5, 5});
    InferenceResult r;
    r.theta_u = MatrixXd::Zero(10, 10);
    r.n_split = 100;
    for (const auto& [j, k] : g.cross_pairs()) r.xi_hat_sq[InterBlockIndex::make(j, k, g)] = 1.0;
    CHECK(bonferroni_select(r, 0.05).empty());

    r.theta_u(1, 7) = 1.0;  // z = 10
    r.theta_u(2, 8) = 0.25;  // z = 2.5, below the corrected quantile
    const double q = normal_quantile(1.0 - 4.0 * 0.05 / 100.0);
    REQUIRE(q > 2.5);
    REQUIRE(q < 10.0);
    const auto sel = bonferroni_select(r, 0.05);
    REQUIRE(sel.size() == 1);
    CHECK(sel.begin()->j == 1);
    CHECK(sel.begin()->k == 7);
}

TEST_CASE("leading plus remainder reproduces the de-biased error") {
    GeneratorSpec spec;
    spec.d = 8;
    spec.s = 2;
    spec.seed = 30;
    const IsaModel model = generate_model(spec);
    const MatrixXd x = sample_gaussian(model, 50, std::uint64_t{3});
    const CovariancePair cov = blocked_covariance(sample_covariance(x, false), model.partition, 50);
    std::mt19937_64 rng(2);
    const MatrixXd theta_hat = 0.1 * oracle::random_symmetric(8, rng);
    const MatrixXd m = oracle::random_symmetric(8, rng);
    const MatrixXd p = block_diagonal(oracle::random_symmetric(8, rng), model.partition);
    const MatrixXd sg_hat = unperturbed_blocked(cov);
    const MatrixXd sg_star = block_diagonal(model.sigma, model.partition);
    const LeadingRemainder lr =
        leading_remainder(theta_hat, cov.full, sg_hat, m, p, model.sigma, sg_star, model.theta);
    const MatrixXd err = debias_matrix(theta_hat, cov, m, p) - model.theta.dense();
    CHECK(max_norm((lr.leading + lr.remainder - err).eval()) < 1e-10);
}

TEST_CASE("pipeline end to end") {
    GeneratorSpec spec;
    spec.d = 10;
    spec.s = 3;
    spec.seed = 5;
    const IsaModel model = generate_model(spec);
    const MatrixXd x = sample_gaussian(model, 400, std::uint64_t{9});
    PipelineConfig cfg;
    cfg.lambda = 0.1;
    cfg.shuffle = true;
    cfg.seed = 77;
    const PipelineOutput a = run_untangle_and_chord(x, model.partition, cfg);
    const PipelineOutput b = run_untangle_and_chord(x, model.partition, cfg);
    CHECK(a.result.theta_u == b.result.theta_u);
    CHECK(a.result.xi_hat_sq == b.result.xi_hat_sq);
    CHECK(a.result.theta_u.allFinite());
    CHECK(a.result.xi_hat_sq.size() == 25);
    CHECK(a.result.n_split == 200);
    CHECK(a.result.lambda_prime == doctest::Approx(0.5 * std::sqrt(std::log(10.0) / 200.0)));
    for (const auto& [idx, v] : a.result.xi_hat_sq) {
        CHECK(std::isfinite(v));
        CHECK(v >= kVarianceFloor);
        CHECK(model.partition.group_of(idx.j) == 0);
    }
    CHECK(max_norm((a.m.m * a.cov2.full.dense() - MatrixXd::Identity(10, 10)).eval()) <= a.result.lambda_prime + 1e-8);
    for (const auto& [j, k] : model.partition.cross_pairs()) CHECK(a.p.m(j, k) == 0.0);

    CHECK_THROWS_AS(run_untangle_and_chord(x.topRows(399), model.partition, cfg), std::invalid_argument);
    cfg.lambda_grid = {0.1, 0.2};
    CHECK_THROWS_AS(run_untangle_and_chord(x, model.partition, cfg), std::invalid_argument);
}

TEST_CASE("standardized errors are close to N(0,1) under a null model") {
    GeneratorSpec spec;
    spec.d = 6;
    spec.s = 0;
    spec.seed = 12;
    const IsaModel model = generate_model(spec);
    PipelineConfig cfg;
    cfg.lambda = 0.1;
    std::vector<double> z;
    const Index n = 500;
    for (int rep = 0; rep < 200; ++rep) {
        std::mt19937_64 rng = make_stream(99, kInferenceStream, static_cast<std::uint64_t>(rep));
        const PipelineOutput po = run_untangle_and_chord(sample_gaussian(model, 2 * n, rng), model.partition, cfg);
        const auto it = po.result.xi_hat_sq.find(InterBlockIndex::make(0, 3, model.partition));
        z.push_back(std::sqrt(static_cast<double>(n)) * po.result.theta_u(0, 3) / std::sqrt(it->second));
    }
    double mean = 0.0, var = 0.0;
    for (double v : z) mean += v / static_cast<double>(z.size());
    for (double v : z) var += (v - mean) * (v - mean) / static_cast<double>(z.size() - 1);
    CHECK(mean > -0.2);
    CHECK(mean < 0.2);
    CHECK(var > 0.7);
    CHECK(var < 1.3);
}
