#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "rbmlab/model.hpp"
#include "rbmlab/noise.hpp"

namespace rbmlab {

/// N particles in R^d, row-major positions.
struct Ensemble {
    std::size_t n = 0;
    std::size_t d = 1;
    std::vector<double> x;
    double t = 0.0;
    std::uint64_t stream_id = 0;

    Ensemble() = default;
    Ensemble(std::size_t n_, std::size_t d_) : n(n_), d(d_), x(n_ * d_, 0.0) {}

    std::span<double> row(std::size_t i) { return {x.data() + i * d, d}; }
    std::span<const double> row(std::size_t i) const { return {x.data() + i * d, d}; }
};

/// Weighted point cloud; weights sum to one.
struct EmpiricalMeasure {
    std::size_t d = 1;
    std::vector<double> points;
    std::vector<double> weights;

    std::size_t size() const noexcept { return weights.size(); }
    std::span<const double> point(std::size_t i) const { return {points.data() + i * d, d}; }

    static EmpiricalMeasure uniform(std::vector<double> points, std::size_t d = 1);
    static EmpiricalMeasure weighted(std::vector<double> points, std::vector<double> weights,
                                     std::size_t d = 1);
    static EmpiricalMeasure of(const Ensemble& e) { return uniform(e.x, e.d); }
};

/// Initial law mu_0. Parameters are per dimension; a scalar is broadcast.
struct InitialLaw {
    enum class Kind { gaussian, uniform, point, mixture };

    Kind kind = Kind::point;
    std::vector<double> mean{0.0};
    std::vector<double> variance{0.0};
    std::vector<double> lower{0.0};
    std::vector<double> upper{1.0};
    std::vector<double> location{0.0};
    std::vector<InitialLaw> components;
    std::vector<double> mixture_weights;

    static InitialLaw gaussian(double mean, double variance);
    static InitialLaw gaussian(std::vector<double> mean, std::vector<double> variance);
    static InitialLaw uniform(double a, double b);
    static InitialLaw uniform(std::vector<double> a, std::vector<double> b);
    static InitialLaw point(double x0);
    static InitialLaw point(std::vector<double> x0);
    static InitialLaw mixture(std::vector<InitialLaw> components, std::vector<double> weights);

    /// Throws ConfigError on invalid parameters.
    void validate(std::size_t d) const;

    /// One draw. `rng` supplies uniforms; `normals` supplies Gaussians.
    void sample(CounterRng& rng, std::span<const double> normals, std::span<double> out) const;
};

/// N i.i.d. draws; particle i uses counter keys (replica, i, *, *) of `seed`.
Ensemble init_iid(const InitialLaw& law, std::size_t n, std::uint64_t seed, std::size_t d = 1,
                  std::uint32_t replica = 0);

/// N^-1 sum |X^i|^q with the Euclidean norm.
double moment(const Ensemble& e, double q);

/// N^-1 sum_j K(x - X^j).
void mean_force(const Ensemble& e, const ModelSpec& model, std::span<const double> x,
                std::span<double> out);
std::vector<double> mean_force(const Ensemble& e, const ModelSpec& model,
                               std::span<const double> x);

double sample_mean(std::span<const double> v);
/// Unbiased sample variance.
double sample_variance(std::span<const double> v);

/// CSV with header particle_id,x_1..x_d.
void write_csv(std::ostream& os, const Ensemble& e);
Ensemble read_csv(std::istream& is);

}  // namespace rbmlab
