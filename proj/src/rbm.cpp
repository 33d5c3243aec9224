#include "rbmlab/rbm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "rbmlab/errors.hpp"

namespace rbmlab {

std::vector<std::uint32_t> Partition::batch_index() const {
    std::vector<std::uint32_t> out(n);
    for (std::size_t b = 0; b < batches(); ++b)
        for (auto i : batch(b)) out[i] = static_cast<std::uint32_t>(b);
    return out;
}

bool Partition::valid() const {
    if (p < 2 || n % p != 0 || members.size() != n) return false;
    std::vector<char> seen(n, 0);
    for (auto i : members) {
        if (i >= n || seen[i]) return false;
        seen[i] = 1;
    }
    return true;
}

Partition Partition::canonical() const {
    Partition c = *this;
    const std::size_t nb = batches();
    for (std::size_t b = 0; b < nb; ++b)
        std::sort(c.members.begin() + static_cast<std::ptrdiff_t>(b * p),
                  c.members.begin() + static_cast<std::ptrdiff_t>((b + 1) * p));
    std::vector<std::size_t> order(nb);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return c.members[a * p] < c.members[b * p]; });
    std::vector<std::uint32_t> m;
    m.reserve(n);
    for (auto b : order) m.insert(m.end(), c.members.begin() + static_cast<std::ptrdiff_t>(b * p),
                                  c.members.begin() + static_cast<std::ptrdiff_t>((b + 1) * p));
    c.members = std::move(m);
    return c;
}

Partition random_partition(std::size_t n, std::size_t p, const NoiseStream& noise,
                           std::uint32_t step, std::uint32_t replica) {
    if (p < 2) throw ConfigError("batch size p must be >= 2");
    if (n % p != 0) throw ConfigError("batch size p must divide N");
    Partition part;
    part.n = n;
    part.p = p;
    part.members.resize(n);
    std::iota(part.members.begin(), part.members.end(), 0u);
    CounterRng rng(noise.with_purpose(Purpose::partition), NoiseKey{replica, 0, step, 0});
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng.below(i);
        std::swap(part.members[i - 1], part.members[j]);
    }
    for (std::size_t b = 0; b < n / p; ++b)
        std::sort(part.members.begin() + static_cast<std::ptrdiff_t>(b * p),
                  part.members.begin() + static_cast<std::ptrdiff_t>((b + 1) * p));
    return part;
}

std::size_t interval_count(double T, double tau) {
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");
    if (!(T >= 0.0)) throw ConfigError("T must be >= 0");
    return static_cast<std::size_t>(std::floor(T / tau * (1.0 + 1e-12)));
}

Ensemble rbm_step(const Ensemble& e, const Partition& partition, const ModelSpec& model,
                  double tau, std::size_t n_substeps, const NoiseStream& noise,
                  std::uint32_t step, std::uint32_t replica, Exec exec) {
    if (partition.n != e.n || !partition.valid()) throw ConfigError("partition invalid for ensemble");
    if (e.d != model.dimension()) throw ConfigError("ensemble and model dimensions differ");
    const auto plan = StepPlan::for_interval(tau, n_substeps);
    Ensemble out = e;
    const std::size_t p = partition.p;
    parallel_for(partition.batches(), exec, [&](std::size_t lo, std::size_t hi) {
        std::vector<double> f(p * e.d);
        for (std::size_t b = lo; b < hi; ++b) {
            for (std::size_t j = 0; j < plan.n_substeps; ++j) {
                const double t = e.t + static_cast<double>(j) * plan.dt;
                advance_group(model, out.x, e.d, partition.batch(b), plan.dt, noise,
                              StepIndex{replica, step, static_cast<std::uint32_t>(j)}, t, f);
            }
        }
    });
    out.t = e.t + tau;
    return out;
}

Ensemble full_system_interval(const Ensemble& e, const ModelSpec& model, double tau,
                              std::size_t n_substeps, const NoiseStream& noise,
                              std::uint32_t step, std::uint32_t replica, Exec exec) {
    const auto plan = StepPlan::for_interval(tau, n_substeps);
    Ensemble out = e;
    for (std::size_t j = 0; j < plan.n_substeps; ++j) {
        const double t0 = out.t;
        out = full_system_step(out, model, plan.dt, noise,
                               StepIndex{replica, step, static_cast<std::uint32_t>(j)}, exec);
        out.t = t0 + plan.dt;
    }
    out.t = e.t + tau;
    return out;
}

RbmRun run_rbm(const ModelSpec& model, const InitialLaw& law, std::size_t n, const RbmConfig& cfg,
               std::uint64_t seed, std::uint32_t replica, Exec exec) {
    if (cfg.p < 2 || n % cfg.p != 0) throw ConfigError("batch size p must be >= 2 and divide N");
    const std::size_t steps = interval_count(cfg.T, cfg.tau);
    RbmRun run;
    run.config = cfg;
    run.schedule = BatchSchedule{n, cfg.p, seed, replica, {}};
    run.schedule.steps.reserve(steps);
    run.trajectory.reserve(steps + 1);
    run.trajectory.push_back(init_iid(law, n, seed, model.dimension(), replica));
    const NoiseStream noise(seed, Purpose::brownian);
    for (std::size_t k = 0; k < steps; ++k) {
        auto part = random_partition(n, cfg.p, noise, static_cast<std::uint32_t>(k), replica);
        Ensemble next = rbm_step(run.trajectory.back(), part, model, cfg.tau, cfg.n_substeps,
                                 noise, static_cast<std::uint32_t>(k), replica, exec);
        next.t = static_cast<double>(k + 1) * cfg.tau;
        run.trajectory.push_back(std::move(next));
        run.schedule.steps.push_back(std::move(part));
    }
    return run;
}

std::vector<Ensemble> run_full_system(const ModelSpec& model, const InitialLaw& law, std::size_t n,
                                      const RbmConfig& cfg, std::uint64_t seed,
                                      std::uint32_t replica, Exec exec) {
    const std::size_t steps = interval_count(cfg.T, cfg.tau);
    std::vector<Ensemble> traj;
    traj.reserve(steps + 1);
    traj.push_back(init_iid(law, n, seed, model.dimension(), replica));
    const NoiseStream noise(seed, Purpose::brownian);
    for (std::size_t k = 0; k < steps; ++k) {
        Ensemble next = full_system_interval(traj.back(), model, cfg.tau, cfg.n_substeps, noise,
                                             static_cast<std::uint32_t>(k), replica, exec);
        next.t = static_cast<double>(k + 1) * cfg.tau;
        traj.push_back(std::move(next));
    }
    return traj;
}

void write_schedule_csv(std::ostream& os, const BatchSchedule& s) {
    os << "step,particle_id,batch\n";
    for (std::size_t k = 0; k < s.steps.size(); ++k) {
        const auto idx = s.steps[k].batch_index();
        for (std::size_t i = 0; i < idx.size(); ++i) os << k << ',' << i << ',' << idx[i] << '\n';
    }
}

}  // namespace rbmlab
