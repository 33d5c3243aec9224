#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "rbmlab/noise.hpp"
#include "rbmlab/parallel.hpp"
#include "rbmlab/rbm.hpp"

namespace rbmlab {

/// Positions and velocities of N particles in R^d (row-major).
struct KineticEnsemble {
    std::size_t n = 0;
    std::size_t d = 1;
    std::vector<double> x;
    std::vector<double> v;
    double t = 0.0;

    KineticEnsemble() = default;
    KineticEnsemble(std::size_t n_, std::size_t d_)
        : n(n_), d(d_), x(n_ * d_, 0.0), v(n_ * d_, 0.0) {}

    std::vector<double> mean_velocity() const;
    /// max_i |v_i - mean|.
    double velocity_spread() const;
    /// N^-1 sum |v_i - mean|^2.
    double velocity_variance() const;
};

/// H(x_i, x_j, v_i) >= 0: constant 1, or 1 / (1 + |x_i - x_j|^2)^alpha.
struct AlignmentKernel {
    enum class Kind { constant, cucker_smale };
    Kind kind = Kind::constant;
    double alpha = 0.0;

    static AlignmentKernel constant() { return {Kind::constant, 0.0}; }
    static AlignmentKernel cucker_smale(double alpha);

    double operator()(const double* xi, const double* xj, const double* vi, std::size_t d) const;
};

enum class Normalization { by_n, by_n_minus_1 };

/// Explicit Euler for x' = v, v' = c sum_{j != i} H (v_j - v_i), c = 1/N or 1/(N-1).
KineticEnsemble flocking_full_step(const KineticEnsemble& e, const AlignmentKernel& h, double dt,
                                   Normalization norm = Normalization::by_n);

/// Alignment restricted to batches with weight 1/(p-1).
KineticEnsemble flocking_rbm_step(const KineticEnsemble& e, const AlignmentKernel& h,
                                  const Partition& partition, double dt);

/// M tracked (x, v) samples of particle 1.
struct KineticMeanField {
    KineticEnsemble samples;
    std::size_t k = 0;
    std::size_t p = 2;
    double tau = 0.1;
    std::size_t n_substeps = 1;
};

/// Mean-field RBM map for the kinetic system: each sample draws p-1 companions from the
/// current ensemble, the p-particle system evolves for tau, slot 0 is kept.
KineticMeanField qinf_step(const KineticMeanField& mf, const AlignmentKernel& h,
                           const NoiseStream& noise, Exec exec = {});

/// CSV with header particle_id,x_1..x_d,v_1..v_d.
void write_kinetic_csv(std::ostream& os, const KineticEnsemble& e);

}  // namespace rbmlab
