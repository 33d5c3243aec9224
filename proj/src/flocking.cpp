#include "rbmlab/flocking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "rbmlab/errors.hpp"
#include "rbmlab/integrator.hpp"
#include "rbmlab/meanfield.hpp"

namespace rbmlab {

std::vector<double> KineticEnsemble::mean_velocity() const {
    std::vector<double> m(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) m[c] += v[i * d + c];
    for (double& c : m) c /= static_cast<double>(n);
    return m;
}

double KineticEnsemble::velocity_spread() const {
    const auto m = mean_velocity();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r2 = 0.0;
        for (std::size_t c = 0; c < d; ++c) r2 += (v[i * d + c] - m[c]) * (v[i * d + c] - m[c]);
        worst = std::max(worst, std::sqrt(r2));
    }
    return worst;
}

double KineticEnsemble::velocity_variance() const {
    const auto m = mean_velocity();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) acc += (v[i * d + c] - m[c]) * (v[i * d + c] - m[c]);
    return acc / static_cast<double>(n);
}

AlignmentKernel AlignmentKernel::cucker_smale(double alpha) {
    if (!(alpha >= 0.0)) throw ConfigError("Cucker-Smale exponent must be >= 0");
    return {Kind::cucker_smale, alpha};
}

double AlignmentKernel::operator()(const double* xi, const double* xj, const double*,
                                   std::size_t d) const {
    if (kind == Kind::constant) return 1.0;
    double r2 = 0.0;
    for (std::size_t c = 0; c < d; ++c) r2 += (xi[c] - xj[c]) * (xi[c] - xj[c]);
    return std::pow(1.0 + r2, -alpha);
}

namespace {

/// Velocity and position update for the particles in `members`, reading the old state.
void align_group(const KineticEnsemble& in, KineticEnsemble& out, const AlignmentKernel& h,
                 std::span<const std::uint32_t> members, double inv, double dt) {
    const std::size_t d = in.d;
    std::vector<double> acc(d);
    for (auto i : members) {
        std::fill(acc.begin(), acc.end(), 0.0);
        const double* xi = in.x.data() + std::size_t{i} * d;
        const double* vi = in.v.data() + std::size_t{i} * d;
        for (auto j : members) {
            if (j == i) continue;
            const double* xj = in.x.data() + std::size_t{j} * d;
            const double* vj = in.v.data() + std::size_t{j} * d;
            const double w = h(xi, xj, vi, d);
            for (std::size_t c = 0; c < d; ++c) acc[c] += w * (vj[c] - vi[c]);
        }
        for (std::size_t c = 0; c < d; ++c) {
            out.x[i * d + c] = xi[c] + dt * vi[c];
            out.v[i * d + c] = vi[c] + dt * (inv * acc[c]);
        }
        check_finite(std::span<const double>(out.x.data() + std::size_t{i} * d, d), i, in.t + dt);
        check_finite(std::span<const double>(out.v.data() + std::size_t{i} * d, d), i, in.t + dt);
    }
}

}  // namespace

KineticEnsemble flocking_full_step(const KineticEnsemble& e, const AlignmentKernel& h, double dt,
                                   Normalization norm) {
    if (e.n == 0) throw ConfigError("kinetic ensemble needs N >= 1");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    std::vector<std::uint32_t> members(e.n);
    std::iota(members.begin(), members.end(), 0u);
    double inv = 1.0 / static_cast<double>(e.n);
    if (norm == Normalization::by_n_minus_1) inv = e.n > 1 ? 1.0 / static_cast<double>(e.n - 1) : 0.0;
    KineticEnsemble out = e;
    align_group(e, out, h, members, inv, dt);
    out.t = e.t + dt;
    return out;
}

KineticEnsemble flocking_rbm_step(const KineticEnsemble& e, const AlignmentKernel& h,
                                  const Partition& partition, double dt) {
    if (partition.n != e.n || !partition.valid()) throw ConfigError("partition invalid for ensemble");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    const double inv = 1.0 / static_cast<double>(partition.p - 1);
    KineticEnsemble out = e;
    for (std::size_t b = 0; b < partition.batches(); ++b)
        align_group(e, out, h, partition.batch(b), inv, dt);
    out.t = e.t + dt;
    return out;
}

KineticMeanField qinf_step(const KineticMeanField& mf, const AlignmentKernel& h,
                           const NoiseStream& noise, Exec exec) {
    const std::size_t m = mf.samples.n, d = mf.samples.d, p = mf.p;
    if (p < 2) throw ConfigError("p must be >= 2");
    if (m < p) throw ConfigError("kinetic mean-field ensemble needs M >= p");
    const auto plan = StepPlan::for_interval(mf.tau, mf.n_substeps);
    const double inv = 1.0 / static_cast<double>(p - 1);
    KineticMeanField out = mf;
    parallel_for(m, exec, [&](std::size_t lo, std::size_t hi) {
        std::vector<std::uint32_t> comp(p - 1), slots(p);
        std::iota(slots.begin(), slots.end(), 0u);
        KineticEnsemble local(p, d), next(p, d);
        for (std::size_t i = lo; i < hi; ++i) {
            draw_companions(noise, m, p, i, mf.k, true, comp);
            for (std::size_t s = 0; s < p; ++s) {
                const std::size_t src = s == 0 ? i : comp[s - 1];
                std::copy_n(mf.samples.x.data() + src * d, d, local.x.data() + s * d);
                std::copy_n(mf.samples.v.data() + src * d, d, local.v.data() + s * d);
            }
            local.t = mf.samples.t;
            for (std::size_t j = 0; j < plan.n_substeps; ++j) {
                align_group(local, next, h, slots, inv, plan.dt);
                next.t = local.t + plan.dt;
                std::swap(local, next);
            }
            std::copy_n(local.x.data(), d, out.samples.x.data() + i * d);
            std::copy_n(local.v.data(), d, out.samples.v.data() + i * d);
        }
    });
    out.k = mf.k + 1;
    out.samples.t = mf.samples.t + mf.tau;
    return out;
}

void write_kinetic_csv(std::ostream& os, const KineticEnsemble& e) {
    os << "particle_id";
    for (std::size_t c = 0; c < e.d; ++c) os << ",x_" << (c + 1);
    for (std::size_t c = 0; c < e.d; ++c) os << ",v_" << (c + 1);
    os << '\n';
    const auto old = os.precision(17);
    for (std::size_t i = 0; i < e.n; ++i) {
        os << i;
        for (std::size_t c = 0; c < e.d; ++c) os << ',' << e.x[i * e.d + c];
        for (std::size_t c = 0; c < e.d; ++c) os << ',' << e.v[i * e.d + c];
        os << '\n';
    }
    os.precision(old);
}

}  // namespace rbmlab
