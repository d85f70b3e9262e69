#include "doctest.h"
#include "oracles.hpp"

#include "isa/normal.hpp"

#include <random>

using namespace isa;

TEST_CASE("normal quantile against bisection") {
    CHECK(std::abs(normal_quantile(0.975) - 1.959964) < 1e-6);
    for (double p : {1e-10, 1e-6, 0.001, 0.02425, 0.1, 0.5, 0.7, 0.975, 0.9999932}) {
        CHECK(std::abs(normal_quantile(p) - oracle::normal_quantile_bisect(p)) < 1e-9);
    }
    // Near 1 the probability itself carries only ~1e-7 relative precision
    // in its tail mass, so the comparison is looser.
    CHECK(std::abs(normal_quantile(1 - 1e-9) - oracle::normal_quantile_bisect(1 - 1e-9)) < 1e-7);
    CHECK_THROWS_AS(normal_quantile(0.0), std::domain_error);
    CHECK_THROWS_AS(normal_quantile(1.0), std::domain_error);
    CHECK(normal_cdf(0.0) == 0.5);
}

TEST_CASE("ks statistic") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    std::vector<double> x(2000);
    for (double& v : x) v = nd(rng);
    CHECK(ks_statistic_normal(x) < 0.04);
    for (double& v : x) v += 1.0;
    CHECK(ks_statistic_normal(x) > 0.3);
    CHECK(ks_statistic_normal({0.0}) == doctest::Approx(0.5));
}
