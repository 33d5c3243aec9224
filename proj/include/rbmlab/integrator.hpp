#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rbmlab/ensemble.hpp"
#include "rbmlab/model.hpp"
#include "rbmlab/noise.hpp"
#include "rbmlab/parallel.hpp"

namespace rbmlab {

/// Coordinates beyond this magnitude abort a run.
inline constexpr double kBlowupRadius = 1e12;

struct StepPlan {
    double dt = 0.0;
    std::size_t n_substeps = 1;

    /// dt = tau / n_substeps.
    static StepPlan for_interval(double tau, std::size_t n_substeps);
};

/// Position of one EM substep in the (replica, step, substep) key space.
struct StepIndex {
    std::uint32_t replica = 0;
    std::uint32_t step = 0;
    std::uint32_t substep = 0;

    NoiseKey key(std::size_t particle) const noexcept {
        return {replica, static_cast<std::uint32_t>(particle), step, substep};
    }
};

using DriftEval = std::function<void(std::size_t i, std::span<const double> x, std::span<double> out)>;
using KeyFn = std::function<NoiseKey(std::size_t i)>;

/// x' = x + drift dt + sqrt(2 sigma^2 dt) xi for every row of `positions` (n x d).
/// All drifts are evaluated at the incoming state before any row moves.
std::vector<double> em_step(std::span<const double> positions, std::size_t d,
                            const DriftEval& drift, double sigma, double dt,
                            const NoiseStream& noise, const KeyFn& keys, double t = 0.0);

/// One EM substep of the interacting system restricted to `members` (sorted ascending),
/// interaction weight 1/(|members|-1). Rows not in `members` are untouched.
/// `drift_scratch` must hold |members| * d doubles.
void advance_group(const ModelSpec& model, std::span<double> x, std::size_t d,
                   std::span<const std::uint32_t> members, double dt, const NoiseStream& noise,
                   StepIndex index, double t, std::span<double> drift_scratch,
                   Exec exec = {});

/// Full interacting system: b(X^i) + (N-1)^-1 sum_{j != i} K(X^i - X^j).
Ensemble full_system_step(const Ensemble& e, const ModelSpec& model, double dt,
                          const NoiseStream& noise, StepIndex index, Exec exec = {});

/// Throws NumericalBlowup when any coordinate of row i is non-finite or too large.
void check_finite(std::span<const double> row, std::size_t particle, double t);

}  // namespace rbmlab
