#include "rbmlab/integrator.hpp"

#include <cmath>
#include <numeric>

#include "rbmlab/errors.hpp"

namespace rbmlab {

StepPlan StepPlan::for_interval(double tau, std::size_t n_substeps) {
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");
    if (n_substeps == 0) throw ConfigError("n_substeps must be >= 1");
    return {tau / static_cast<double>(n_substeps), n_substeps};
}

void check_finite(std::span<const double> row, std::size_t particle, double t) {
    for (double c : row) {
        if (!std::isfinite(c)) throw NumericalBlowup(particle, t, "non-finite coordinate");
        if (std::abs(c) > kBlowupRadius) throw NumericalBlowup(particle, t, "coordinate beyond 1e12");
    }
}

std::vector<double> em_step(std::span<const double> positions, std::size_t d,
                            const DriftEval& drift, double sigma, double dt,
                            const NoiseStream& noise, const KeyFn& keys, double t) {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (d == 0 || positions.size() % d != 0) throw ConfigError("positions do not match dimension");
    const std::size_t n = positions.size() / d;
    std::vector<double> f(positions.size());
    for (std::size_t i = 0; i < n; ++i) {
        std::span<double> fi(f.data() + i * d, d);
        drift(i, positions.subspan(i * d, d), fi);
        for (double c : fi)
            if (!std::isfinite(c)) throw NumericalBlowup(i, t, "non-finite drift");
    }
    const double amp = std::sqrt(2.0 * sigma * sigma * dt);
    std::vector<double> out(positions.begin(), positions.end());
    std::vector<double> xi(d);
    for (std::size_t i = 0; i < n; ++i) {
        if (amp > 0.0) noise.normals(keys(i), xi);
        for (std::size_t c = 0; c < d; ++c) {
            double& v = out[i * d + c];
            v += f[i * d + c] * dt;
            if (amp > 0.0) v += amp * xi[c];
        }
        check_finite(std::span<const double>(out.data() + i * d, d), i, t + dt);
    }
    return out;
}

namespace {

template <class Fn>
void group_drifts(const Drift& b, Fn kernel, std::span<const double> x, std::size_t d,
                  std::span<const std::uint32_t> members, std::size_t lo, std::size_t hi,
                  double inv, std::span<double> f) {
    double zbuf[8], kbuf[8];
    std::vector<double> zvec, kvec;
    double* z = zbuf;
    double* k = kbuf;
    if (d > 8) {
        zvec.resize(d);
        kvec.resize(d);
        z = zvec.data();
        k = kvec.data();
    }
    std::vector<double> acc(d);
    for (std::size_t a = lo; a < hi; ++a) {
        const std::size_t i = members[a];
        const double* xi = x.data() + i * d;
        std::span<double> fi = f.subspan(a * d, d);
        b(std::span<const double>(xi, d), fi);
        if constexpr (!Fn::zero) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t bidx = 0; bidx < members.size(); ++bidx) {
                const std::size_t j = members[bidx];
                if (j == i) continue;
                const double* xj = x.data() + j * d;
                for (std::size_t c = 0; c < d; ++c) z[c] = xi[c] - xj[c];
                kernel(z, k, d);
                for (std::size_t c = 0; c < d; ++c) acc[c] += k[c];
            }
            for (std::size_t c = 0; c < d; ++c) fi[c] += inv * acc[c];
        }
    }
}

}  // namespace

void advance_group(const ModelSpec& model, std::span<double> x, std::size_t d,
                   std::span<const std::uint32_t> members, double dt, const NoiseStream& noise,
                   StepIndex index, double t, std::span<double> f, Exec exec) {
    const std::size_t g = members.size();
    const bool interacting = !model.kernel().is_zero();
    if (g == 1 && interacting) throw ConfigError("interacting system needs at least two particles");
    const double inv = g > 1 ? 1.0 / static_cast<double>(g - 1) : 0.0;
    parallel_for(g, exec, [&](std::size_t lo, std::size_t hi) {
        visit_kernel(model.kernel(), [&](auto fn) {
            group_drifts(model.drift(), fn, x, d, members, lo, hi, inv, f);
        });
        for (std::size_t a = lo; a < hi; ++a)
            for (std::size_t c = 0; c < d; ++c)
                if (!std::isfinite(f[a * d + c]))
                    throw NumericalBlowup(members[a], t, "non-finite drift");
    });
    const double amp = std::sqrt(2.0 * model.sigma() * model.sigma() * dt);
    parallel_for(g, exec, [&](std::size_t lo, std::size_t hi) {
        double xibuf[8];
        std::vector<double> xivec;
        std::span<double> xi(xibuf, d);
        if (d > 8) {
            xivec.resize(d);
            xi = xivec;
        }
        for (std::size_t a = lo; a < hi; ++a) {
            const std::size_t i = members[a];
            if (amp > 0.0) noise.normals(index.key(i), xi);
            double* row = x.data() + i * d;
            for (std::size_t c = 0; c < d; ++c) {
                row[c] += f[a * d + c] * dt;
                if (amp > 0.0) row[c] += amp * xi[c];
            }
            check_finite(std::span<const double>(row, d), i, t + dt);
        }
    });
}

Ensemble full_system_step(const Ensemble& e, const ModelSpec& model, double dt,
                          const NoiseStream& noise, StepIndex index, Exec exec) {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (e.d != model.dimension()) throw ConfigError("ensemble and model dimensions differ");
    if (e.n == 1 && !model.kernel().is_zero())
        throw ConfigError("full system with N=1 requires K = 0");
    std::vector<std::uint32_t> members(e.n);
    std::iota(members.begin(), members.end(), 0u);
    std::vector<double> f(e.n * e.d);
    Ensemble out = e;
    advance_group(model, out.x, e.d, members, dt, noise, index, e.t, f, exec);
    out.t = e.t + dt;
    return out;
}

}  // namespace rbmlab
