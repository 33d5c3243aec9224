#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "rbmlab/ensemble.hpp"
#include "rbmlab/integrator.hpp"
#include "rbmlab/model.hpp"
#include "rbmlab/noise.hpp"
#include "rbmlab/parallel.hpp"

namespace rbmlab {

/// One division of {0..N-1} into N/p batches of size p. Batch b is
/// members[b*p .. b*p+p), sorted ascending.
struct Partition {
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<std::uint32_t> members;

    std::size_t batches() const noexcept { return p == 0 ? 0 : n / p; }
    std::span<const std::uint32_t> batch(std::size_t b) const { return {members.data() + b * p, p}; }

    /// batch_of[i] for every particle.
    std::vector<std::uint32_t> batch_index() const;

    /// Each index exactly once, every batch of size p.
    bool valid() const;

    /// Sorted batches ordered by their smallest element; equal partitions compare equal.
    Partition canonical() const;

    friend bool operator==(const Partition&, const Partition&) = default;
};

/// Fisher-Yates shuffle keyed by (replica, step), then chunked into batches of size p.
/// `noise` is the run's stream; the draw uses its partition domain.
Partition random_partition(std::size_t n, std::size_t p, const NoiseStream& noise,
                           std::uint32_t step, std::uint32_t replica = 0);

struct BatchSchedule {
    std::size_t n = 0;
    std::size_t p = 0;
    std::uint64_t seed = 0;
    std::uint32_t replica = 0;
    std::vector<Partition> steps;
};

struct RbmConfig {
    std::size_t p = 2;
    double tau = 0.1;
    double T = 1.0;
    std::size_t n_substeps = 1;
};

struct RbmRun {
    std::vector<Ensemble> trajectory;
    BatchSchedule schedule;
    RbmConfig config;
};

/// floor(T/tau) with a relative guard against representation error.
std::size_t interval_count(double T, double tau);

/// Evolves every batch of `partition` over one interval of length tau with n_substeps
/// EM substeps. Noise key for particle i, substep j: (replica, i, step, j).
Ensemble rbm_step(const Ensemble& e, const Partition& partition, const ModelSpec& model,
                  double tau, std::size_t n_substeps, const NoiseStream& noise,
                  std::uint32_t step, std::uint32_t replica = 0, Exec exec = {});

/// The full system over one interval with the same key layout as rbm_step.
Ensemble full_system_interval(const Ensemble& e, const ModelSpec& model, double tau,
                              std::size_t n_substeps, const NoiseStream& noise,
                              std::uint32_t step, std::uint32_t replica = 0, Exec exec = {});

RbmRun run_rbm(const ModelSpec& model, const InitialLaw& law, std::size_t n, const RbmConfig& cfg,
               std::uint64_t seed, std::uint32_t replica = 0, Exec exec = {});

/// Full system on the same grid times and noise keys as run_rbm with equal arguments.
std::vector<Ensemble> run_full_system(const ModelSpec& model, const InitialLaw& law, std::size_t n,
                                      const RbmConfig& cfg, std::uint64_t seed,
                                      std::uint32_t replica = 0, Exec exec = {});

/// One row per (step, particle): step,particle_id,batch.
void write_schedule_csv(std::ostream& os, const BatchSchedule& s);

}  // namespace rbmlab
