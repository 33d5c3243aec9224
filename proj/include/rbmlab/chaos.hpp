#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "rbmlab/ensemble.hpp"
#include "rbmlab/model.hpp"
#include "rbmlab/parallel.hpp"
#include "rbmlab/rbm.hpp"

namespace rbmlab {

/// Influence lists L_i^(k) and clean flags after k intervals.
struct InfluenceState {
    std::size_t n = 0;
    std::size_t p = 0;
    std::size_t k = 0;
    std::vector<std::vector<std::uint32_t>> lists;
    std::vector<char> clean;

    /// L_i = {i}, everyone clean.
    static InfluenceState initial(std::size_t n, std::size_t p);
};

/// Merges lists within each batch of `partition` (the division used on the interval
/// that starts at t_k). A particle stays clean iff every batchmate was clean and their
/// lists were pairwise disjoint.
InfluenceState advance_influence(const InfluenceState& state, const Partition& partition);

enum class CleanMethod { exact, monte_carlo };

struct CleanReport {
    std::size_t n = 0;
    std::size_t p = 0;
    std::size_t k = 0;
    double epsilon = 0.0;
    double standard_error = 0.0;
    CleanMethod method = CleanMethod::exact;
    std::size_t replicates = 0;
};

inline constexpr std::size_t kExactSequenceCap = 10'000'000;
inline constexpr std::size_t kInfluenceListCap = 1'000'000;

/// Every partition of {0..n-1} into batches of size p, canonical form.
std::vector<Partition> enumerate_partitions(std::size_t n, std::size_t p);

/// P(particle 0 not clean after k intervals), by enumeration of all partition sequences.
CleanReport epsilon_exact(std::size_t n, std::size_t p, std::size_t k);

/// Monte Carlo estimate tracking only particle 0's ancestry; batches are sampled lazily.
CleanReport epsilon_mc(std::size_t n, std::size_t p, std::size_t k, std::size_t replicates,
                       std::uint64_t seed, Exec exec = {});

struct ChaosExperiment {
    double w1 = 0.0;
    double epsilon = 0.0;
    double epsilon_se = 0.0;
    double bound_ratio = 0.0;
    std::size_t samples = 0;
};

/// W_1 between particle 1 of `m` independent RBM runs after k intervals and m samples of
/// the mean-field operator applied k times; also returns the Monte Carlo epsilon_k.
ChaosExperiment theorem34_experiment(const ModelSpec& model, const InitialLaw& law, std::size_t n,
                                     std::size_t p, double tau, std::size_t k, std::size_t m,
                                     std::uint64_t seed, std::size_t n_substeps = 1,
                                     Exec exec = {});

void write_clean_csv(std::ostream& os, const std::vector<CleanReport>& rows);

}  // namespace rbmlab
