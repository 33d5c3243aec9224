#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rbmlab {

/// Least-squares line through (log x, log y).
struct SlopeFit {
    std::vector<double> log_x;
    std::vector<double> log_y;
    double slope = 0.0;
    double intercept = 0.0;
    /// Root-mean-square residual in log space.
    double residual = 0.0;
    /// 95% interval for the slope.
    double ci_low = 0.0;
    double ci_high = 0.0;
    /// Slopes refitted on each seed separately (empty when not replicated).
    std::vector<double> seed_slopes;
};

/// OLS fit; the interval uses the regression standard error (needs >= 3 points).
SlopeFit fit_loglog(std::span<const double> x, std::span<const double> y);

/// Fit to the pooled values `y`; the interval comes from the spread of the per-seed
/// slopes (rows of `per_seed`, one value per x) with a Student-t quantile.
SlopeFit fit_loglog_replicated(std::span<const double> x, std::span<const double> y,
                               const std::vector<std::vector<double>>& per_seed);

/// Two-sided 95% Student-t quantile.
double t_quantile_975(double dof);

}  // namespace rbmlab
