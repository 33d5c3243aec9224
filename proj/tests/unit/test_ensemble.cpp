#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rbmlab/ensemble.hpp"
#include "rbmlab/errors.hpp"
#include "rbmlab/model.hpp"

using namespace rbmlab;

TEST_CASE("point law gives identical particles") {
    const auto e = init_iid(InitialLaw::point(0.0), 5, 1);
    for (double x : e.x) CHECK(x == 0.0);
    CHECK(moment(e, 2.0) == 0.0);
}

TEST_CASE("gaussian initialization is deterministic and centred") {
    const std::size_t n = 100000;
    const auto a = init_iid(InitialLaw::gaussian(0.0, 1.0), n, 1);
    const auto b = init_iid(InitialLaw::gaussian(0.0, 1.0), n, 1);
    CHECK(a.x == b.x);
    CHECK(std::abs(sample_mean(a.x)) < 4.0 / std::sqrt(double(n)));
    CHECK(init_iid(InitialLaw::gaussian(0.0, 1.0), n, 2).x != a.x);
}

TEST_CASE("uniform and mixture laws stay in their support") {
    const auto u = init_iid(InitialLaw::uniform(-1.0, 2.0), 10000, 4);
    for (double x : u.x) {
        CHECK(x >= -1.0);
        CHECK(x < 2.0);
    }
    CHECK(sample_mean(u.x) == doctest::Approx(0.5).epsilon(0.05));
    const auto mix = InitialLaw::mixture({InitialLaw::point(-1.0), InitialLaw::point(1.0)}, {1.0, 3.0});
    const auto m = init_iid(mix, 40000, 5);
    CHECK(sample_mean(m.x) == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("invalid laws throw") {
    CHECK_THROWS_AS(init_iid(InitialLaw::uniform(1.0, 0.0), 3, 1), ConfigError);
    CHECK_THROWS_AS(init_iid(InitialLaw::gaussian(0.0, -1.0), 3, 1), ConfigError);
}

TEST_CASE("moments and mean force match hand computations") {
    Ensemble e(3, 1);
    e.x = {-1.0, 0.0, 2.0};
    CHECK(moment(e, 1.0) == doctest::Approx(1.0));
    CHECK(moment(e, 2.0) == doctest::Approx(5.0 / 3.0));
    const auto m = preset("linear-strong");
    const double x = 0.5;
    // K(z) = -0.2 z averaged over the ensemble: -0.2 (x - mean).
    CHECK(mean_force(e, m, std::span<const double>(&x, 1))[0] == doctest::Approx(-0.2 * (0.5 - 1.0 / 3.0)));
}

TEST_CASE("empirical measure weights normalize") {
    const auto mu = EmpiricalMeasure::weighted({0.0, 1.0, 2.0}, {1.0, 1.0, 2.0});
    double s = 0;
    for (double w : mu.weights) s += w;
    CHECK(std::abs(s - 1.0) < 1e-12);
    CHECK(mu.weights[2] == doctest::Approx(0.5));
}

TEST_CASE("csv round trip preserves positions exactly") {
    const auto e = init_iid(InitialLaw::gaussian({0.0, 1.0}, {1.0, 2.0}), 17, 9, 2);
    std::stringstream ss;
    write_csv(ss, e);
    const auto back = read_csv(ss);
    CHECK(back.n == 17);
    CHECK(back.d == 2);
    CHECK(back.x == e.x);
}
