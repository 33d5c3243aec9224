#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rbmlab/ensemble.hpp"
#include "rbmlab/fokker_planck.hpp"
#include "rbmlab/integrator.hpp"
#include "rbmlab/model.hpp"
#include "rbmlab/noise.hpp"
#include "rbmlab/parallel.hpp"

namespace rbmlab {

struct MeanFieldConfig {
    std::size_t p = 2;
    double tau = 0.1;
    std::size_t n_substeps = 1;
    /// Companions drawn with replacement (bootstrap) or as distinct indices.
    bool with_replacement = true;
    /// Noise replica id used by each slot; empty means slot s uses id s.
    std::vector<std::uint32_t> slot_keys;

    std::uint32_t slot_key(std::size_t s) const {
        return slot_keys.empty() ? static_cast<std::uint32_t>(s) : slot_keys[s];
    }
};

/// M tracked samples of particle 1 at interval k.
struct MeanFieldEnsemble {
    std::size_t m = 0;
    std::size_t d = 1;
    std::vector<double> y;
    std::size_t k = 0;
    double t = 0.0;
    MeanFieldConfig config;

    std::span<const double> row(std::size_t i) const { return {y.data() + i * d, d}; }
    Ensemble as_ensemble() const;
};

/// M i.i.d. draws from mu_0 with the same keys init_iid uses.
MeanFieldEnsemble make_meanfield(const InitialLaw& law, std::size_t m, const MeanFieldConfig& cfg,
                                 std::uint64_t seed, std::size_t d = 1);

/// One application of the mean-field operator: every sample takes p-1 fresh companions
/// from the current ensemble (never itself), the p-particle system runs for tau, and
/// only slot 0 is kept. Companion draws are keyed by (sample, interval); slot s of
/// sample i uses Brownian key (slot_key(s), i, k, substep).
MeanFieldEnsemble ginf_step(const MeanFieldEnsemble& mf, const ModelSpec& model,
                            const NoiseStream& noise, Exec exec = {});

/// Companion indices for sample i at interval k (p-1 entries).
void draw_companions(const NoiseStream& noise, std::size_t m, std::size_t p, std::size_t i,
                     std::size_t k, bool with_replacement, std::span<std::uint32_t> out);

/// Interacting system with weight 1/N over all j (self term included when asked).
Ensemble mckean_vlasov_step(const Ensemble& e, const ModelSpec& model, double dt,
                            const NoiseStream& noise, StepIndex index, bool include_self = false,
                            Exec exec = {});

/// One interval of dX = (b(X) + Kbar(X, t)) dt + sqrt(2) sigma dW with the mean force
/// frozen to `tables[j]` on substep j. Keys match slot `slot_key` of ginf_step. 1D only.
void frozen_force_interval(std::span<double> x, const ModelSpec& model,
                           std::span<const ForceTable> tables, double tau,
                           const NoiseStream& noise, std::size_t k, std::uint32_t slot_key = 0,
                           Exec exec = {});

struct GaussianState {
    double mean = 0.0;
    double variance = 0.0;
};

/// Exact law of particle 1 for linear b(x) = -a x, K(z) = -kappa z, propagated through
/// n_steps intervals with i.i.d. Gaussian companions refreshed each interval.
GaussianState gaussian_oracle(const ModelSpec& model, std::size_t p, double tau,
                              GaussianState state, std::size_t n_steps);

/// Fixed point of gaussian_oracle for one interval.
GaussianState gaussian_fixed_point(const ModelSpec& model, std::size_t p, double tau);

/// Dense matrix exponential (row-major n x n), scaling and squaring.
std::vector<double> expm(std::span<const double> a, std::size_t n);

struct InvariantResult {
    MeanFieldEnsemble ensemble;
    std::vector<double> w1_trace;
    std::size_t steps = 0;
};

/// Iterates ginf_step until five consecutive steps move the ensemble by less than `tol`
/// in W_1. Strong regime only.
InvariantResult iterate_to_invariant(
    const MeanFieldEnsemble& mf, const ModelSpec& model, const NoiseStream& noise, double tol,
    std::size_t max_steps, Exec exec = {},
    const std::function<void(const MeanFieldEnsemble&, double)>& on_step = {});

}  // namespace rbmlab
