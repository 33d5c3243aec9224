#include <doctest.h>

#include <cmath>

#include "rbmlab/errors.hpp"
#include "rbmlab/slope_fit.hpp"

using namespace rbmlab;

TEST_CASE("exact power law gives its exponent") {
    const std::vector<double> x = {0.1, 0.05, 0.025, 0.0125};
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 * v * v);
    const auto f = fit_loglog(x, y);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(std::log(3.0)));
    CHECK(f.residual < 1e-12);
}

TEST_CASE("too few points or nonpositive values are rejected") {
    CHECK_THROWS_AS(fit_loglog(std::vector<double>{1, 2}, std::vector<double>{1, 2}), ConfigError);
    CHECK_THROWS_AS(fit_loglog(std::vector<double>{1, 2, 3}, std::vector<double>{1, 0, 2}), ConfigError);
}

TEST_CASE("student t quantile") {
    CHECK(t_quantile_975(1) == doctest::Approx(12.7062).epsilon(1e-4));
    CHECK(t_quantile_975(15) == doctest::Approx(2.13145).epsilon(1e-4));
}

TEST_CASE("replicated fit interval covers the per-seed slopes") {
    const std::vector<double> x = {1, 2, 4, 8};
    const std::vector<std::vector<double>> seeds = {{1.0, 0.52, 0.24, 0.13}, {1.0, 0.48, 0.26, 0.12}, {1.0, 0.5, 0.25, 0.125}};
    const std::vector<double> y = {1.0, 0.5, 0.25, 0.125};
    const auto f = fit_loglog_replicated(x, y, seeds);
    CHECK(f.slope == doctest::Approx(-1.0));
    CHECK(f.seed_slopes.size() == 3);
    CHECK(f.ci_low < -1.0);
    CHECK(f.ci_high > -1.0);
}
