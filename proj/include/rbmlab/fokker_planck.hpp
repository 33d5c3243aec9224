#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "rbmlab/ensemble.hpp"
#include "rbmlab/model.hpp"

namespace rbmlab {

/// Cell averages on [-A, A] with n uniform cells.
struct GridDensity {
    double half_width = 8.0;
    std::size_t n = 0;
    std::vector<double> rho;
    double t = 0.0;

    double dx() const noexcept { return 2.0 * half_width / static_cast<double>(n); }
    double center(std::size_t j) const noexcept {
        return -half_width + (static_cast<double>(j) + 0.5) * dx();
    }
    double mass() const;
    double mean() const;
    double variance() const;
    /// Mass carried by the first and last cell.
    double boundary_mass() const;
};

/// Cell averages of mu_0 computed from its CDF, renormalised to unit mass on the grid.
GridDensity density_from_law(const InitialLaw& law, std::size_t n, double half_width);

/// Point values f(x_j), renormalised to unit mass.
GridDensity density_from_function(const std::function<double(double)>& f, std::size_t n,
                                  double half_width);

/// Linear interpolation of a scalar field sampled on a uniform grid; linear extrapolation
/// beyond the ends.
struct ForceTable {
    double x0 = 0.0;
    double dx = 1.0;
    std::vector<double> values;

    double operator()(double x) const noexcept {
        const std::size_t n = values.size();
        if (n == 1) return values[0];
        double s = (x - x0) / dx;
        std::size_t j;
        if (s <= 0.0) j = 0;
        else if (s >= static_cast<double>(n - 1)) j = n - 2;
        else j = static_cast<std::size_t>(s);
        const double w = s - static_cast<double>(j);
        return values[j] + w * (values[j + 1] - values[j]);
    }
};

/// (K * rho)(x_j) at cell centres by midpoint quadrature.
ForceTable mean_force_on_grid(const GridDensity& rho, const ModelSpec& model);

/// Largest dt keeping the explicit scheme positivity preserving at the current state.
double fp_admissible_dt(const GridDensity& rho, const ModelSpec& model);

/// One explicit step of the exponentially fitted finite-volume scheme with no-flux
/// boundaries. Throws StabilityError when dt exceeds the admissible step.
GridDensity fp_step(const GridDensity& rho, const ModelSpec& model, double dt);

struct FpDiagnostics {
    std::size_t steps = 0;
    /// Largest |mass_after - mass_before| over single steps.
    double max_step_mass_defect = 0.0;
    double max_boundary_mass = 0.0;
    double min_density = 0.0;
};

struct FpTrajectory {
    std::vector<GridDensity> snapshots;
    FpDiagnostics diagnostics;
};

/// Steps with fixed dt (the last step before each snapshot is shortened).
/// dt <= 0 selects 0.9 of the admissible step at every step.
FpTrajectory fp_solve(const GridDensity& rho0, const ModelSpec& model, double T, double dt,
                      std::vector<double> snapshot_times = {});
FpTrajectory fp_solve(const InitialLaw& law, const ModelSpec& model, double T, double dt,
                      std::size_t n_cells, double half_width,
                      std::vector<double> snapshot_times = {});

/// Advances in place to time `t_end`.
void advance_to(GridDensity& rho, const ModelSpec& model, double t_end, double dt,
                FpDiagnostics* diag = nullptr);

/// Mean-field force tables at each of `times` (ascending, >= rho0.t), for driving
/// frozen-force particle systems.
std::vector<ForceTable> mean_force_path(GridDensity rho0, const ModelSpec& model,
                                        std::span<const double> times, double dt,
                                        GridDensity* final_state = nullptr);

/// Cell centres weighted by cell mass; empty cells dropped.
EmpiricalMeasure grid_to_measure(const GridDensity& rho);

/// Exact W_q (q = 1 or 2) between a sorted uniform sample and the piecewise-constant
/// density, computed on quantile functions.
double w_q_samples_vs_grid(std::span<const double> sorted_samples, const GridDensity& rho,
                           double q = 1.0);

/// CSV with header x,rho.
void write_density_csv(std::ostream& os, const GridDensity& rho);

}  // namespace rbmlab
