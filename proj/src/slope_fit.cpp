#include "rbmlab/slope_fit.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>

#include "rbmlab/errors.hpp"

namespace rbmlab {

double t_quantile_975(double dof) {
    if (!(dof > 0.0)) return std::numeric_limits<double>::infinity();
    boost::math::students_t dist(dof);
    return boost::math::quantile(dist, 0.975);
}

SlopeFit fit_loglog(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ConfigError("slope fit needs matching x and y");
    if (x.size() < 3) throw ConfigError("slope fit needs at least 3 points");
    SlopeFit f;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw ConfigError("slope fit needs positive values");
        f.log_x.push_back(std::log(x[i]));
        f.log_y.push_back(std::log(y[i]));
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += f.log_x[i];
        my += f.log_y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (f.log_x[i] - mx) * (f.log_x[i] - mx);
        sxy += (f.log_x[i] - mx) * (f.log_y[i] - my);
    }
    if (!(sxx > 0.0)) throw ConfigError("slope fit needs distinct x values");
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = f.log_y[i] - (f.intercept + f.slope * f.log_x[i]);
        ss += r * r;
    }
    f.residual = std::sqrt(ss / n);
    const double se = std::sqrt(ss / (n - 2.0) / sxx);
    const double t = t_quantile_975(n - 2.0);
    f.ci_low = f.slope - t * se;
    f.ci_high = f.slope + t * se;
    return f;
}

SlopeFit fit_loglog_replicated(std::span<const double> x, std::span<const double> y,
                               const std::vector<std::vector<double>>& per_seed) {
    SlopeFit f = fit_loglog(x, y);
    for (const auto& row : per_seed) {
        bool positive = row.size() == x.size();
        for (double v : row) positive = positive && v > 0.0;
        if (positive) f.seed_slopes.push_back(fit_loglog(x, row).slope);
    }
    const std::size_t s = f.seed_slopes.size();
    if (s >= 2) {
        double m = 0.0;
        for (double v : f.seed_slopes) m += v;
        m /= static_cast<double>(s);
        double var = 0.0;
        for (double v : f.seed_slopes) var += (v - m) * (v - m);
        var /= static_cast<double>(s - 1);
        const double half = t_quantile_975(static_cast<double>(s - 1)) *
                            std::sqrt(var / static_cast<double>(s));
        f.ci_low = f.slope - half;
        f.ci_high = f.slope + half;
    }
    return f;
}

}  // namespace rbmlab
