#include <doctest.h>

#include <cmath>

#include "rbmlab/errors.hpp"
#include "rbmlab/noise.hpp"
#include "rbmlab/wasserstein.hpp"

using namespace rbmlab;

TEST_CASE("point masses and shifts") {
    const auto a = EmpiricalMeasure::uniform({0.0});
    const auto b = EmpiricalMeasure::uniform({3.0});
    CHECK(wasserstein(a, b, 1.0).value == doctest::Approx(3.0));
    CHECK(wasserstein(a, b, 2.0).value == doctest::Approx(3.0));
    const auto c = EmpiricalMeasure::uniform({0.0, 1.0, 5.0});
    const auto d = EmpiricalMeasure::uniform({0.5, 1.5, 5.5});
    CHECK(w_q_1d(c, d, 1.0) == doctest::Approx(0.5));
    CHECK(w_q_1d(c, c, 2.0) == 0.0);
}

TEST_CASE("weighted quantile walk against a hand-computed plan") {
    // mu = 0.5 d0 + 0.5 d2, nu = d1: every unit of mass moves distance 1.
    const auto mu = EmpiricalMeasure::uniform({0.0, 2.0});
    const auto nu = EmpiricalMeasure::uniform({1.0});
    CHECK(w_q_1d(mu, nu, 1.0) == doctest::Approx(1.0));
    // mu = 0.25 d0 + 0.75 d4, nu = 0.5 d0 + 0.5 d4: mass 0.25 moves 4.
    const auto p = EmpiricalMeasure::weighted({0.0, 4.0}, {0.25, 0.75});
    const auto q = EmpiricalMeasure::weighted({0.0, 4.0}, {0.5, 0.5});
    CHECK(w_q_1d(p, q, 1.0) == doctest::Approx(1.0));
    CHECK(w_q_1d(p, q, 2.0) == doctest::Approx(std::sqrt(0.25 * 16.0)));
}

TEST_CASE("quantile formula equals exact assignment on random instances") {
    CounterRng rng(NoiseStream(17, Purpose::test), NoiseKey{});
    for (int inst = 0; inst < 100; ++inst) {
        const std::size_t n = 1 + rng.below(40);
        std::vector<double> a(n), b(n);
        for (auto& v : a) v = 10 * rng.uniform() - 5;
        for (auto& v : b) v = 3 * rng.uniform();
        const double q = inst % 2 ? 2.0 : 1.0;
        const auto mu = EmpiricalMeasure::uniform(a), nu = EmpiricalMeasure::uniform(b);
        CHECK(std::abs(w_q_1d(mu, nu, q) - w_q_exact_smalld(mu, nu, q).value) < 1e-10);
    }
}

TEST_CASE("transport cost solves a small LP by hand") {
    // Supply (0.5, 0.5) at {0, 10}, demand (0.25, 0.75) at {0, 10}.
    const std::vector<double> cost = {0.0, 10.0, 10.0, 0.0};
    CHECK(transport_cost(std::vector<double>{0.5, 0.5}, std::vector<double>{0.25, 0.75}, cost) ==
          doctest::Approx(2.5));
}

TEST_CASE("assignment solver finds the optimum") {
    const std::vector<double> cost = {4, 1, 3, 2, 0, 5, 3, 2, 2};
    const auto perm = solve_assignment(cost, 3);
    double total = 0;
    for (std::size_t i = 0; i < 3; ++i) total += cost[i * 3 + perm[i]];
    CHECK(total == 5.0);
}

TEST_CASE("two-dimensional measures use the exact solvers") {
    const auto mu = EmpiricalMeasure::uniform({0.0, 0.0, 1.0, 0.0}, 2);
    const auto nu = EmpiricalMeasure::uniform({0.0, 1.0, 1.0, 1.0}, 2);
    const auto r = wasserstein(mu, nu, 2.0);
    CHECK(r.value == doctest::Approx(1.0));
    CHECK(r.method != OtMethod::quantile_1d);
    CHECK_THROWS_AS(w_q_1d(mu, nu, 1.0), DimensionError);
    std::vector<double> big(2 * 600, 0.0);
    CHECK_THROWS_AS(w_q_exact_smalld(EmpiricalMeasure::uniform(big, 2), nu, 1.0), SizeError);
}

TEST_CASE("total-variation bound on disjoint point masses") {
    const auto a = EmpiricalMeasure::uniform({0.0});
    const auto b = EmpiricalMeasure::uniform({1.0});
    for (double q : {1.0, 2.0}) {
        const auto t = tv_wq_bound(a, b, q);
        CHECK(t.holds);
        CHECK(t.tv == doctest::Approx(2.0));
        CHECK(t.bound == doctest::Approx(1.0));
        CHECK(t.distance == doctest::Approx(1.0));
    }
}
