#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rbmlab/errors.hpp"
#include "rbmlab/fokker_planck.hpp"

using namespace rbmlab;

namespace {

double gauss(double x, double m, double v) {
    return std::exp(-(x - m) * (x - m) / (2 * v)) / std::sqrt(2 * std::numbers::pi * v);
}

}  // namespace

TEST_CASE("grid moments of a discretized gaussian") {
    const auto rho = density_from_law(InitialLaw::gaussian(0.5, 2.0), 2048, 16.0);
    CHECK(rho.mass() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(rho.mean() == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(rho.variance() == doctest::Approx(2.0 + rho.dx() * rho.dx() / 12.0).epsilon(1e-5));
}

TEST_CASE("mass is conserved and density stays nonnegative") {
    const auto m = preset("cubic-weak");
    auto rho = density_from_law(InitialLaw::uniform(-1.0, 2.0), 256, 6.0);
    const auto traj = fp_solve(rho, m, 1.0, 0.0);
    CHECK(traj.diagnostics.max_step_mass_defect <= 1e-12);
    CHECK(traj.diagnostics.min_density >= 0.0);
    CHECK(traj.snapshots.back().mass() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("explicit steps beyond the positivity bound are refused") {
    const auto m = preset("linear-strong");
    const auto rho = density_from_law(InitialLaw::gaussian(0.0, 1.0), 256, 8.0);
    const double dt = fp_admissible_dt(rho, m);
    CHECK_NOTHROW(fp_step(rho, m, dt));
    try {
        fp_step(rho, m, 2.0 * dt);
        FAIL("expected StabilityError");
    } catch (const StabilityError& e) {
        CHECK(e.admissible_dt() == doctest::Approx(dt));
    }
}

TEST_CASE("point-mass initial data has no spread without diffusion or interaction") {
    ModelParams p;
    const ModelSpec frozen(p);
    const auto rho = density_from_law(InitialLaw::point(0.3), 64, 4.0);
    const auto out = fp_solve(rho, frozen, 1.0, 0.01).snapshots.back();
    CHECK(out.rho == rho.rho);
}

TEST_CASE("Ornstein-Uhlenbeck flow follows the analytic gaussian") {
    const auto m = preset("ou-noninteracting");
    const auto rho0 = density_from_function([](double x) { return gauss(x, 1.0, 0.5); }, 512, 10.0);
    const auto out = fp_solve(rho0, m, 1.0, 0.0).snapshots.back();
    // mean 1 e^{-t}, variance 1 + (0.5 - 1) e^{-2t}
    const double mt = std::exp(-1.0), vt = 1.0 - 0.5 * std::exp(-2.0);
    CHECK(out.mean() == doctest::Approx(mt).epsilon(1e-3));
    CHECK(out.variance() == doctest::Approx(vt).epsilon(2e-3));
}

TEST_CASE("stationary variance for the linear interacting model") {
    const auto m = preset("linear-strong");
    auto rho = density_from_law(InitialLaw::gaussian(0.0, 1.0), 1024, 8.0);
    advance_to(rho, m, 12.0, 0.0);
    CHECK(rho.variance() == doctest::Approx(0.25 / 1.2).epsilon(5e-3));
}

TEST_CASE("force table interpolates the mean force") {
    const auto m = preset("linear-strong");
    const auto rho = density_from_law(InitialLaw::gaussian(0.7, 1.0), 1024, 10.0);
    const auto f = mean_force_on_grid(rho, m);
    for (double x : {-2.0, 0.0, 0.33, 3.0}) CHECK(f(x) == doctest::Approx(-0.2 * (x - rho.mean())).epsilon(1e-6));
}

TEST_CASE("samples against a grid in quantile space") {
    const auto rho = density_from_law(InitialLaw::uniform(0.0, 1.0), 100, 2.0);
    // Uniform(0,1) on cells aligned with its support: W1 to the single point 0.5 is 1/4.
    const std::vector<double> half{0.5};
    CHECK(w_q_samples_vs_grid(half, rho, 1.0) == doctest::Approx(0.25).epsilon(1e-9));
    // W2^2 = 1/12.
    CHECK(w_q_samples_vs_grid(half, rho, 2.0) == doctest::Approx(std::sqrt(1.0 / 12.0)).epsilon(1e-9));
}
