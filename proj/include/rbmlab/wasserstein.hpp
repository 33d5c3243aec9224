#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rbmlab/ensemble.hpp"

namespace rbmlab {

enum class OtMethod { quantile_1d, assignment_exact, lp_exact };

std::string to_string(OtMethod m);

struct DistanceReport {
    double q = 1.0;
    double value = 0.0;
    OtMethod method = OtMethod::quantile_1d;
    std::size_t n_mu = 0;
    std::size_t n_nu = 0;
};

/// Largest uniform instance solved by assignment, and weighted instance solved by LP.
inline constexpr std::size_t kAssignmentCap = 512;
inline constexpr std::size_t kLpCap = 64;

/// Exact W_q between 1D measures via the monotone (quantile) coupling.
double w_q_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double q);

/// W_q between two uniformly weighted 1D samples (any sizes).
double w_q_samples(std::span<const double> a, std::span<const double> b, double q);

/// Same, for inputs already sorted ascending.
double w_q_sorted(std::span<const double> a, std::span<const double> b, double q);

/// Exact optimal transport in R^d: assignment for equal-size uniform clouds (n <= 512),
/// min-cost flow otherwise (n, m <= 64).
DistanceReport w_q_exact_smalld(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double q);

/// Quantile formula in 1D, exact solver otherwise.
DistanceReport wasserstein(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double q);

/// Minimum-cost perfect matching for a square cost matrix (row-major). Returns the
/// column assigned to each row.
std::vector<std::size_t> solve_assignment(std::span<const double> cost, std::size_t n);

/// Optimal transport plan cost between weight vectors a (n) and b (m) with costs c (n x m).
double transport_cost(std::span<const double> a, std::span<const double> b,
                      std::span<const double> cost);

struct TvBound {
    double bound = 0.0;
    double distance = 0.0;
    double tv = 0.0;
    double m_q = 0.0;
    bool holds = true;
};

/// W_q <= 2^{1-1/q} (M_q TV)^{1/q} with TV = sum |mu - nu| and M_q the q-th moment of
/// |mu - nu| / TV about the best candidate centre.
TvBound tv_wq_bound(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double q);

}  // namespace rbmlab
