#include "rbmlab/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "rbmlab/errors.hpp"

namespace rbmlab {

namespace {

void check_grid(std::size_t n, double half_width) {
    if (n < 2) throw ConfigError("grid needs at least two cells");
    if (!(half_width > 0.0)) throw ConfigError("domain half-width must be positive");
}

void require_1d(const ModelSpec& model) {
    if (model.dimension() != 1) throw DimensionError("Fokker-Planck solver is one-dimensional");
}

/// Bernoulli function w / (e^w - 1).
double bernoulli(double w) {
    if (std::abs(w) < 1e-8) return 1.0 - 0.5 * w;
    return w / std::expm1(w);
}

double law_cdf(const InitialLaw& law, double x) {
    using K = InitialLaw::Kind;
    switch (law.kind) {
        case K::gaussian: {
            const double m = law.mean[0], v = law.variance[0];
            if (v == 0.0) return x >= m ? 1.0 : 0.0;
            return 0.5 * std::erfc(-(x - m) / std::sqrt(2.0 * v));
        }
        case K::uniform: {
            const double a = law.lower[0], b = law.upper[0];
            return std::clamp((x - a) / (b - a), 0.0, 1.0);
        }
        case K::point: return x >= law.location[0] ? 1.0 : 0.0;
        case K::mixture: {
            double total = 0.0, acc = 0.0;
            for (std::size_t c = 0; c < law.components.size(); ++c) {
                total += law.mixture_weights[c];
                acc += law.mixture_weights[c] * law_cdf(law.components[c], x);
            }
            return acc / total;
        }
    }
    return 0.0;
}

struct Coefficients {
    std::vector<double> alpha;  // weight of rho_j in F_{j+1/2}
    std::vector<double> beta;   // weight of rho_{j+1} in F_{j+1/2}
};

Coefficients assemble(const GridDensity& rho, const ModelSpec& model) {
    const std::size_t n = rho.n;
    const double dx = rho.dx();
    const double s2 = model.sigma() * model.sigma();
    std::vector<double> u(n - 1);
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const double xf = -rho.half_width + static_cast<double>(j + 1) * dx;
        u[j] = model.drift().polynomial_at(xf);
    }
    if (!model.drift().is_polynomial()) {
        for (std::size_t j = 0; j + 1 < n; ++j) {
            const double xf = -rho.half_width + static_cast<double>(j + 1) * dx;
            double out;
            model.drift()(std::span<const double>(&xf, 1), std::span<double>(&out, 1));
            u[j] = out;
        }
    }
    visit_kernel(model.kernel(), [&](auto fn) {
        if constexpr (decltype(fn)::zero) return;
        for (std::size_t j = 0; j + 1 < n; ++j) {
            const double xf = -rho.half_width + static_cast<double>(j + 1) * dx;
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                if (rho.rho[k] == 0.0) continue;
                const double z = xf - rho.center(k);
                double kv;
                fn(&z, &kv, 1);
                acc += kv * rho.rho[k];
            }
            u[j] += acc * dx;
        }
    });
    Coefficients c{std::vector<double>(n - 1), std::vector<double>(n - 1)};
    for (std::size_t j = 0; j + 1 < n; ++j) {
        if (!std::isfinite(u[j])) throw NumericalBlowup(j, rho.t, "non-finite advection velocity");
        if (s2 > 0.0) {
            const double w = u[j] * dx / s2;
            c.alpha[j] = s2 / dx * bernoulli(-w);
            c.beta[j] = s2 / dx * bernoulli(w);
        } else {
            c.alpha[j] = std::max(u[j], 0.0);
            c.beta[j] = std::max(-u[j], 0.0);
        }
    }
    return c;
}

double admissible(const Coefficients& c, std::size_t n, double dx) {
    double worst = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double out = (j + 1 < n ? c.alpha[j] : 0.0) + (j > 0 ? c.beta[j - 1] : 0.0);
        worst = std::max(worst, out);
    }
    return worst > 0.0 ? dx / worst : std::numeric_limits<double>::infinity();
}

GridDensity apply(const GridDensity& rho, const Coefficients& c, double dt) {
    const std::size_t n = rho.n;
    const double lam = dt / rho.dx();
    GridDensity out = rho;
    for (std::size_t j = 0; j < n; ++j) {
        double div = 0.0;
        if (j + 1 < n) div += c.alpha[j] * rho.rho[j] - c.beta[j] * rho.rho[j + 1];
        if (j > 0) div -= c.alpha[j - 1] * rho.rho[j - 1] - c.beta[j - 1] * rho.rho[j];
        out.rho[j] = rho.rho[j] - lam * div;
    }
    out.t = rho.t + dt;
    return out;
}

}  // namespace

double GridDensity::mass() const {
    double s = 0.0;
    for (double r : rho) s += r;
    return s * dx();
}

double GridDensity::mean() const {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += center(j) * rho[j];
    return s * dx() / mass();
}

double GridDensity::variance() const {
    const double m = mean();
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += (center(j) - m) * (center(j) - m) * rho[j];
    return s * dx() / mass();
}

double GridDensity::boundary_mass() const { return (rho.front() + rho.back()) * dx(); }

GridDensity density_from_law(const InitialLaw& law, std::size_t n, double half_width) {
    check_grid(n, half_width);
    law.validate(1);
    GridDensity g;
    g.half_width = half_width;
    g.n = n;
    g.rho.resize(n);
    const double dx = g.dx();
    double total = 0.0;
    double lo = law_cdf(law, -half_width);
    for (std::size_t j = 0; j < n; ++j) {
        const double hi = law_cdf(law, -half_width + static_cast<double>(j + 1) * dx);
        g.rho[j] = std::max(hi - lo, 0.0) / dx;
        total += hi - lo;
        lo = hi;
    }
    if (!(total > 0.0)) throw ConfigError("initial law puts no mass on the grid");
    for (double& r : g.rho) r /= total;
    return g;
}

GridDensity density_from_function(const std::function<double(double)>& f, std::size_t n,
                                  double half_width) {
    check_grid(n, half_width);
    GridDensity g;
    g.half_width = half_width;
    g.n = n;
    g.rho.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double v = f(g.center(j));
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("density must be finite and >= 0");
        g.rho[j] = v;
    }
    const double m = g.mass();
    if (!(m > 0.0)) throw ConfigError("density has zero mass");
    for (double& r : g.rho) r /= m;
    return g;
}

ForceTable mean_force_on_grid(const GridDensity& rho, const ModelSpec& model) {
    require_1d(model);
    ForceTable t{rho.center(0), rho.dx(), std::vector<double>(rho.n, 0.0)};
    visit_kernel(model.kernel(), [&](auto fn) {
        if constexpr (decltype(fn)::zero) return;
        for (std::size_t j = 0; j < rho.n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < rho.n; ++k) {
                if (rho.rho[k] == 0.0) continue;
                const double z = rho.center(j) - rho.center(k);
                double kv;
                fn(&z, &kv, 1);
                acc += kv * rho.rho[k];
            }
            t.values[j] = acc * rho.dx();
        }
    });
    return t;
}

double fp_admissible_dt(const GridDensity& rho, const ModelSpec& model) {
    require_1d(model);
    return admissible(assemble(rho, model), rho.n, rho.dx());
}

GridDensity fp_step(const GridDensity& rho, const ModelSpec& model, double dt) {
    require_1d(model);
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    const auto c = assemble(rho, model);
    const double adm = admissible(c, rho.n, rho.dx());
    if (dt > adm * (1.0 + 1e-12)) throw StabilityError(dt, adm);
    return apply(rho, c, dt);
}

void advance_to(GridDensity& rho, const ModelSpec& model, double t_end, double dt,
                FpDiagnostics* diag) {
    require_1d(model);
    const bool automatic = !(dt > 0.0);
    while (rho.t < t_end) {
        const double left = t_end - rho.t;
        if (left <= 1e-14 * std::max(1.0, std::abs(t_end))) {
            rho.t = t_end;
            break;
        }
        const auto c = assemble(rho, model);
        const double adm = admissible(c, rho.n, rho.dx());
        double h = automatic ? 0.9 * adm : dt;
        if (h > adm * (1.0 + 1e-12)) throw StabilityError(h, adm);
        const bool last = h >= left * (1.0 - 1e-12);
        if (last) h = left;
        const double before = diag ? rho.mass() : 0.0;
        rho = apply(rho, c, h);
        if (last) rho.t = t_end;
        if (diag) {
            ++diag->steps;
            diag->max_step_mass_defect =
                std::max(diag->max_step_mass_defect, std::abs(rho.mass() - before));
            diag->max_boundary_mass = std::max(diag->max_boundary_mass, rho.boundary_mass());
            diag->min_density =
                std::min(diag->min_density, *std::min_element(rho.rho.begin(), rho.rho.end()));
        }
    }
}

FpTrajectory fp_solve(const GridDensity& rho0, const ModelSpec& model, double T, double dt,
                      std::vector<double> snapshot_times) {
    require_1d(model);
    if (!(T >= 0.0)) throw ConfigError("T must be >= 0");
    if (snapshot_times.empty()) snapshot_times.push_back(T);
    std::sort(snapshot_times.begin(), snapshot_times.end());
    FpTrajectory out;
    out.diagnostics.min_density = *std::min_element(rho0.rho.begin(), rho0.rho.end());
    out.diagnostics.max_boundary_mass = rho0.boundary_mass();
    GridDensity rho = rho0;
    for (double ts : snapshot_times) {
        if (ts > T || ts < rho0.t) throw ConfigError("snapshot time outside [t0, T]");
        advance_to(rho, model, ts, dt, &out.diagnostics);
        out.snapshots.push_back(rho);
    }
    return out;
}

FpTrajectory fp_solve(const InitialLaw& law, const ModelSpec& model, double T, double dt,
                      std::size_t n_cells, double half_width, std::vector<double> snapshot_times) {
    return fp_solve(density_from_law(law, n_cells, half_width), model, T, dt,
                    std::move(snapshot_times));
}

std::vector<ForceTable> mean_force_path(GridDensity rho, const ModelSpec& model,
                                        std::span<const double> times, double dt,
                                        GridDensity* final_state) {
    std::vector<ForceTable> out;
    out.reserve(times.size());
    for (double ts : times) {
        if (ts < rho.t - 1e-12) throw ConfigError("force path times must be ascending");
        advance_to(rho, model, ts, dt);
        out.push_back(mean_force_on_grid(rho, model));
    }
    if (final_state) *final_state = rho;
    return out;
}

EmpiricalMeasure grid_to_measure(const GridDensity& rho) {
    std::vector<double> pts, w;
    for (std::size_t j = 0; j < rho.n; ++j) {
        if (rho.rho[j] <= 0.0) continue;
        pts.push_back(rho.center(j));
        w.push_back(rho.rho[j] * rho.dx());
    }
    return EmpiricalMeasure::weighted(std::move(pts), std::move(w), 1);
}

double w_q_samples_vs_grid(std::span<const double> s, const GridDensity& rho, double q) {
    if (s.empty()) throw ConfigError("empty sample");
    if (q != 1.0 && q != 2.0) throw ConfigError("sample-vs-grid distance supports q = 1 or 2");
    const std::size_t n = rho.n, ns = s.size();
    const double dx = rho.dx();
    const double a = -rho.half_width;
    // Grid CDF at cell edges, normalised so the last edge is exactly 1.
    std::vector<double> G(n + 1, 0.0);
    for (std::size_t j = 0; j < n; ++j) G[j + 1] = G[j] + std::max(rho.rho[j], 0.0);
    const double total = G[n];
    if (!(total > 0.0)) throw ConfigError("grid density has no mass");
    for (double& g : G) g /= total;
    G[n] = 1.0;
    // Walk the merged breakpoints in u; the sample quantile is constant and the grid
    // quantile is linear on every piece.
    double acc = 0.0;
    std::size_t i = 0, j = 0;
    while (j < n && G[j + 1] <= G[j]) ++j;
    double u = 0.0;
    const double inv_ns = 1.0 / static_cast<double>(ns);
    while (i < ns && j < n) {
        const double u_sample = i + 1 == ns ? 1.0 : static_cast<double>(i + 1) * inv_ns;
        const double u_cell = G[j + 1];
        const double u1 = std::min(u_sample, u_cell);
        const double len = u1 - u;
        if (len > 0.0) {
            const double slope = dx / (G[j + 1] - G[j]);
            const double g0 = a + static_cast<double>(j) * dx + (u - G[j]) * slope;
            const double g1 = a + static_cast<double>(j) * dx + (u1 - G[j]) * slope;
            const double alpha = g0 - s[i], beta = g1 - g0;
            if (q == 2.0) {
                acc += len * (alpha * alpha + alpha * beta + beta * beta / 3.0);
            } else {
                const double f0 = alpha, f1 = g1 - s[i];
                if ((f0 >= 0.0) == (f1 >= 0.0)) {
                    acc += 0.5 * std::abs(f0 + f1) * len;
                } else {
                    const double r = f0 / (f0 - f1);
                    acc += 0.5 * (std::abs(f0) * r + std::abs(f1) * (1.0 - r)) * len;
                }
            }
        }
        u = u1;
        if (u_sample <= u1) ++i;
        if (u_cell <= u1) {
            ++j;
            while (j < n && G[j + 1] <= G[j]) ++j;
        }
    }
    return q == 2.0 ? std::sqrt(std::max(acc, 0.0)) : acc;
}

void write_density_csv(std::ostream& os, const GridDensity& rho) {
    os << "x,rho\n";
    const auto old = os.precision(17);
    for (std::size_t j = 0; j < rho.n; ++j) os << rho.center(j) << ',' << rho.rho[j] << '\n';
    os.precision(old);
}

}  // namespace rbmlab
