#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rbmlab/errors.hpp"
#include "rbmlab/meanfield.hpp"
#include "rbmlab/wasserstein.hpp"

using namespace rbmlab;

namespace {

// Independent two-particle closed form for p = 2: with s = y1 + y2 and d = y1 - y2,
// s decays at rate a and d at rate a + 2 kappa.
double pair_variance(double a, double kappa, double sigma, double tau, double v0) {
    const double s2 = sigma * sigma;
    auto ou = [&](double lam, double var0) {
        return var0 * std::exp(-2 * lam * tau) + 2 * s2 * (1 - std::exp(-2 * lam * tau)) / (2 * lam) * 2;
    };
    const double vs = ou(a, 2 * v0), vd = ou(a + 2 * kappa, 2 * v0);
    return (vs + vd) / 4.0;
}

}  // namespace

TEST_CASE("gaussian oracle matches the pair closed form for p = 2") {
    const auto m = preset("linear-strong");
    for (double tau : {0.05, 0.1, 0.4}) {
        const auto g = gaussian_oracle(m, 2, tau, {0.0, 1.0}, 1);
        CHECK(g.variance == doctest::Approx(pair_variance(1.0, 0.2, 0.5, tau, 1.0)).epsilon(1e-10));
        CHECK(g.mean == 0.0);
    }
    const auto g = gaussian_oracle(m, 2, 0.1, {2.0, 1.0}, 3);
    CHECK(g.mean == doctest::Approx(2.0 * std::exp(-0.3)));
}

TEST_CASE("fixed point of the oracle approaches the Fokker-Planck stationary variance") {
    const auto m = preset("linear-strong");
    const double pi = 0.25 / 1.2;
    const double v2 = gaussian_fixed_point(m, 2, 0.2).variance;
    CHECK(v2 == doctest::Approx(0.209619).epsilon(1e-5));
    double prev = std::abs(v2 - pi);
    for (double tau : {0.1, 0.05, 0.025}) {
        const double gap = std::abs(gaussian_fixed_point(m, 2, tau).variance - pi);
        CHECK(gap < prev);
        CHECK(gap / prev == doctest::Approx(0.5).epsilon(0.1));
        prev = gap;
    }
    CHECK_THROWS_AS(gaussian_fixed_point(preset("cubic-weak"), 2, 0.1), UnsupportedModel);
}

TEST_CASE("matrix exponential of a diagonal and a nilpotent matrix") {
    const std::vector<double> d = {1.0, 0.0, 0.0, -2.0};
    const auto e = expm(d, 2);
    CHECK(e[0] == doctest::Approx(std::exp(1.0)));
    CHECK(e[3] == doctest::Approx(std::exp(-2.0)));
    CHECK(std::abs(e[1]) < 1e-15);
    const std::vector<double> n = {0.0, 3.0, 0.0, 0.0};
    const auto f = expm(n, 2);
    CHECK(f[1] == doctest::Approx(3.0));
    CHECK(f[0] == doctest::Approx(1.0));
}

TEST_CASE("mean-field step variance matches the oracle") {
    const auto m = preset("linear-strong");
    MeanFieldConfig cfg;
    cfg.p = 2;
    cfg.tau = 0.1;
    cfg.n_substeps = 40;
    const std::size_t M = 200000;
    auto mf = make_meanfield(InitialLaw::gaussian(0.0, 1.0), M, cfg, 4);
    mf = ginf_step(mf, m, NoiseStream(4));
    const double v = sample_variance(mf.y);
    const double expected = gaussian_oracle(m, 2, 0.1, {0.0, 1.0}, 1).variance;
    // Sampling SE plus the O(dt) Euler bias at 40 substeps.
    CHECK(std::abs(v - expected) < 4.0 * expected * std::sqrt(2.0 / M) + 2e-3);
    CHECK(mf.k == 1);
    CHECK(mf.t == doctest::Approx(0.1));
}

TEST_CASE("companions never include the sample itself") {
    const NoiseStream s(2);
    std::vector<std::uint32_t> out(3);
    for (std::size_t i = 0; i < 50; ++i) {
        draw_companions(s, 10, 4, i % 10, 0, true, out);
        for (auto j : out) CHECK(j != i % 10);
        draw_companions(s, 10, 4, i % 10, 1, false, out);
        std::sort(out.begin(), out.end());
        CHECK(std::adjacent_find(out.begin(), out.end()) == out.end());
    }
}

TEST_CASE("non-interacting mean-field step equals the frozen-force reference") {
    const auto m = preset("ou-noninteracting");
    MeanFieldConfig cfg;
    cfg.tau = 0.2;
    cfg.n_substeps = 4;
    auto mf = make_meanfield(InitialLaw::gaussian(1.0, 2.0), 1000, cfg, 5);
    std::vector<double> x = mf.y;
    const NoiseStream noise(5);
    const ForceTable zero{-1.0, 1.0, {0.0, 0.0, 0.0}};
    const std::vector<ForceTable> tables(4, zero);
    mf = ginf_step(mf, m, noise);
    frozen_force_interval(x, m, tables, 0.2, noise, 0, cfg.slot_key(0));
    CHECK(mf.y == x);
}

TEST_CASE("iteration reaches a stationary ensemble for a strongly confined model") {
    const auto m = preset("linear-strong");
    MeanFieldConfig cfg;
    cfg.tau = 0.2;
    cfg.n_substeps = 10;
    auto mf = make_meanfield(InitialLaw::gaussian(3.0, 1.0), 20000, cfg, 6);
    const auto res = iterate_to_invariant(mf, m, NoiseStream(6), 0.02, 200);
    CHECK(res.steps >= 5);
    CHECK(std::abs(sample_mean(res.ensemble.y)) < 0.05);
    const double v = sample_variance(res.ensemble.y);
    CHECK(v == doctest::Approx(gaussian_fixed_point(m, 2, 0.2).variance).epsilon(0.05));
    CHECK_THROWS_AS(iterate_to_invariant(make_meanfield(InitialLaw::gaussian(0, 1), 100, cfg, 1),
                                         preset("cubic-weak"), NoiseStream(1), 0.01, 10),
                    ConfigError);
    CHECK_THROWS_AS(iterate_to_invariant(mf, m, NoiseStream(6), 1e-9, 3), ConvergenceError);
}
