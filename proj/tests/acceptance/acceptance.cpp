// Acceptance checks: one PASS/FAIL line per criterion. Run all, or pass criterion
// numbers as arguments to run a subset.
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include "rbmlab/chaos.hpp"
#include "rbmlab/errors.hpp"
#include "rbmlab/flocking.hpp"
#include "rbmlab/fokker_planck.hpp"
#include "rbmlab/rbm.hpp"
#include "rbmlab/studies.hpp"
#include "rbmlab/wasserstein.hpp"

using namespace rbmlab;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

StudyConfig load(const std::string& name) {
    std::ifstream in(std::string(RBMLAB_CONFIG_DIR) + "/" + name + ".json");
    if (!in) throw ConfigError("missing config " + name);
    return parse_config(json::parse(in));
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string slope_text(const SlopeFit& f) {
    return "slope " + fmt(f.slope) + " (95% CI " + fmt(f.ci_low) + ".." + fmt(f.ci_high) + ")";
}

bool in_window(double s, double lo, double hi) { return s >= lo && s <= hi; }

const Check* find_check(const StudyReport& r, const std::string& name) {
    for (const auto& c : r.checks)
        if (c.name == name) return &c;
    return nullptr;
}

Outcome strong_error() {
    const auto r = study_strong_rbm_error(load("strong_rbm_error"));
    const auto* mono = find_check(r, "monotone");
    const bool ok = r.fit && r.fit->slope >= 0.45 && mono && mono->passed;
    return {ok, (r.fit ? slope_text(*r.fit) : "no fit") + " >= 0.45; monotone within 1 SE: " +
                    (mono && mono->passed ? "yes" : "no")};
}

Outcome ginf_rate() {
    const auto cfg = load("ginf_vs_fp");
    const auto r = study_ginf_vs_fp(cfg);
    const bool ok = cfg.M >= 200000 && r.fit && in_window(r.fit->slope, 0.7, 1.3);
    return {ok, slope_text(*r.fit) + " in [0.7, 1.3], M = " + std::to_string(cfg.M) + " x " +
                    std::to_string(cfg.seeds.size()) + " seeds"};
}

Outcome one_step_rate() {
    const auto r = study_ginf_vs_fp(load("ginf_vs_fp_one_step"));
    const bool ok = r.fit && in_window(r.fit->slope, 1.6, 2.4);
    return {ok, slope_text(*r.fit) + " in [1.6, 2.4]"};
}

Outcome clean_rate() {
    const auto r = study_clean_particles(load("clean_particles"));
    const bool slope_ok = r.fit && in_window(r.fit->slope, -1.25, -0.75);
    const auto e4 = epsilon_exact(4, 2, 2), e6 = epsilon_exact(6, 2, 2);
    const bool exact_ok = std::abs(e4.epsilon - 1.0 / 3.0) <= 1e-15 && std::abs(e6.epsilon - 0.2) <= 1e-15;
    const auto m4 = epsilon_mc(4, 2, 2, 100000, 11), m6 = epsilon_mc(6, 2, 2, 100000, 12);
    const double z4 = (m4.epsilon - 1.0 / 3.0) / m4.standard_error;
    const double z6 = (m6.epsilon - 0.2) / m6.standard_error;
    const bool mc_ok = std::abs(z4) <= 3.0 && std::abs(z6) <= 3.0;
    return {slope_ok && exact_ok && mc_ok,
            (r.fit ? slope_text(*r.fit) : "no fit") + " in [-1.25, -0.75]; exact eps2 " + fmt(e4.epsilon) +
                ", " + fmt(e6.epsilon) + "; MC z-scores " + fmt(z4) + ", " + fmt(z6)};
}

Outcome contraction() {
    const auto cfg = load("contraction");
    const double tau = cfg.tau.front();
    const auto tr = contraction_experiment(preset(cfg.preset), cfg.initial, 2.0, cfg.p, tau, cfg.n_substeps,
                                           cfg.M, 50, cfg.seeds.front(), Exec{cfg.threads});
    const double limit = std::exp(-0.6 * tau) * 1.05;
    const double worst = *std::max_element(tr.ratios.begin(), tr.ratios.end());
    return {tr.ratios.size() == 50 && worst <= limit,
            "max per-step ratio " + fmt(worst) + " <= " + fmt(limit) + " over 50 steps, W1 " +
                fmt(tr.w1.front()) + " -> " + fmt(tr.w1.back())};
}

Outcome meanfield_rate() {
    const auto r = study_meanfield_N(load("meanfield_N"));
    const bool ok = r.fit && in_window(r.fit->slope, -0.75, -0.25);
    std::string extra;
    if (r.summary.contains("coupling_slope")) extra += "; coupling slope " + fmt(r.summary["coupling_slope"].get<double>());
    extra += "; K=0 control slope " + fmt(r.summary["control_slope"].get<double>());
    return {ok, "pooled W2 " + slope_text(*r.fit) + " in [-0.75, -0.25]" + extra};
}

Outcome invariant() {
    const auto r = study_invariant_measures(load("invariant_measures"));
    const bool slope_ok = r.fit && in_window(r.fit->slope, 0.6, 1.4);
    const double fp_var = r.summary["fp_stationary_variance"].get<double>();
    const double target = 0.25 / 1.2;
    const bool fp_ok = std::abs(fp_var - target) <= 0.005 * target;
    const auto* orc = find_check(r, "ginf_variance_vs_oracle");
    const bool oracle_ok = orc && orc->passed;
    return {slope_ok && fp_ok && oracle_ok,
            (r.fit ? slope_text(*r.fit) : "no fit") + " in [0.6, 1.4]; FP variance " + fmt(fp_var) +
                " vs " + fmt(target) + "; oracle variance within 3 SE: " + (oracle_ok ? "yes" : "no")};
}

Outcome fp_order() {
    const auto m = preset("ou-noninteracting");
    const double m0 = 1.0, v0 = 0.5, T = 0.5, L = 8.0;
    auto exact = [&](double x, double t) {
        const double mt = m0 * std::exp(-t), vt = 1.0 + (v0 - 1.0) * std::exp(-2.0 * t);
        return std::exp(-(x - mt) * (x - mt) / (2 * vt)) / std::sqrt(2 * std::numbers::pi * vt);
    };
    std::vector<double> hs, errs;
    double worst_defect = 0.0, min_rho = INFINITY;
    for (std::size_t n : {128u, 256u, 512u}) {
        const auto rho0 = density_from_function([&](double x) { return exact(x, 0.0); }, n, L);
        // dt proportional to dx^2 keeps the time error at the spatial order.
        const double dx = rho0.dx();
        const double dt = std::min(0.9 * fp_admissible_dt(rho0, m), 0.2 * dx * dx);
        const auto traj = fp_solve(rho0, m, T, dt);
        const auto& rho = traj.snapshots.back();
        double err = 0.0;
        for (std::size_t j = 0; j < n; ++j) err += std::abs(rho.rho[j] - exact(rho.center(j), T)) * dx;
        hs.push_back(dx);
        errs.push_back(err);
        worst_defect = std::max(worst_defect, traj.diagnostics.max_step_mass_defect);
        min_rho = std::min(min_rho, traj.diagnostics.min_density);
    }
    // Positivity on a rough start: a point mass next to the boundary.
    const auto spike = density_from_law(InitialLaw::point(-7.9), 256, 8.0);
    const auto rough = fp_solve(spike, preset("cubic-weak"), 0.5, 0.0);
    min_rho = std::min(min_rho, rough.diagnostics.min_density);
    worst_defect = std::max(worst_defect, rough.diagnostics.max_step_mass_defect);
    const double order = fit_loglog(hs, errs).slope;
    const bool ok = order >= 1.8 && worst_defect <= 1e-12 && min_rho >= 0.0;
    return {ok, "L1 order " + fmt(order) + " >= 1.8 (errors " + fmt(errs[0]) + ", " + fmt(errs[1]) + ", " +
                    fmt(errs[2]) + "); max mass defect per step " + fmt(worst_defect) + "; min density " +
                    fmt(min_rho)};
}

Outcome wasserstein_oracles() {
    CounterRng rng(NoiseStream(2024, Purpose::test), NoiseKey{9, 0, 0, 0});
    double worst = 0.0;
    for (int inst = 0; inst < 1000; ++inst) {
        const std::size_t n = 1 + rng.below(64);
        const double q = 1.0 + 2.0 * rng.uniform();
        std::vector<double> a(n), b(n);
        const double spread = 0.1 + 10.0 * rng.uniform();
        for (auto& v : a) v = spread * (rng.uniform() - 0.5);
        for (auto& v : b) v = spread * (rng.uniform() - 0.3);
        if (inst % 10 == 0) b[0] = a[0];  // ties
        const auto mu = EmpiricalMeasure::uniform(a), nu = EmpiricalMeasure::uniform(b);
        const double w_quant = w_q_1d(mu, nu, q);
        std::vector<double> cost(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = std::pow(std::abs(a[i] - b[j]), q);
        const auto perm = solve_assignment(cost, n);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += cost[i * n + perm[i]];
        const double w_assign = std::pow(total / double(n), 1.0 / q);
        worst = std::max(worst, std::abs(w_quant - w_assign));
    }
    std::size_t violations = 0;
    double tightest = 0.0;
    for (int inst = 0; inst < 1000; ++inst) {
        const std::size_t n = 1 + rng.below(12);
        std::vector<double> pts(n), wa(n), wb(n);
        for (std::size_t i = 0; i < n; ++i) {
            pts[i] = std::round(20.0 * (rng.uniform() - 0.5) * 4.0) / 4.0;
            wa[i] = rng.uniform() + 1e-3;
            wb[i] = rng.uniform() + 1e-3;
        }
        const auto mu = EmpiricalMeasure::weighted(pts, wa), nu = EmpiricalMeasure::weighted(pts, wb);
        for (double q : {1.0, 2.0}) {
            const auto t = tv_wq_bound(mu, nu, q);
            if (!t.holds) ++violations;
            if (t.bound > 0) tightest = std::max(tightest, t.distance / t.bound);
        }
    }
    return {worst <= 1e-10 && violations == 0,
            "max |quantile - assignment| " + fmt(worst) + " over 1000 instances; TV bound violations " +
                std::to_string(violations) + " of 2000 (max W/bound " + fmt(tightest) + ")"};
}

Outcome exactness() {
    std::size_t mismatches = 0;
    for (const auto& name : {"linear-strong", "cubic-weak", "ou-noninteracting"}) {
        for (std::size_t n : {2u, 5u, 32u}) {
            const RbmConfig cfg{n, 0.05, 1.0, 2};
            const auto rbm = run_rbm(preset(name), InitialLaw::gaussian(0.0, 1.0), n, cfg, 77);
            const auto full = run_full_system(preset(name), InitialLaw::gaussian(0.0, 1.0), n, cfg, 77);
            for (std::size_t k = 0; k < full.size(); ++k)
                if (rbm.trajectory[k].x != full[k].x) ++mismatches;
        }
    }
    std::size_t bad = 0, clean_steps = 0, total = 0;
    for (auto [n, p] : {std::pair<std::size_t, std::size_t>{64, 2}, {60, 3}, {16, 4}}) {
        const NoiseStream noise(31, Purpose::partition);
        auto s = InfluenceState::initial(n, p);
        double cap = 1.0;
        for (std::uint32_t k = 0; k < 10000; ++k) {
            s = advance_influence(s, random_partition(n, p, noise, k));
            cap = std::min(cap * double(p), 1e300);
            for (std::size_t i = 0; i < n; ++i) {
                const double size = double(s.lists[i].size());
                const bool equal = size == cap;
                if (size > cap || equal != bool(s.clean[i])) ++bad;
                if (s.clean[i]) ++clean_steps;
                ++total;
            }
        }
    }
    return {mismatches == 0 && bad == 0,
            "p=N trajectory mismatches " + std::to_string(mismatches) + "; influence-list violations " +
                std::to_string(bad) + " of " + std::to_string(total) + " (clean observations " +
                std::to_string(clean_steps) + ")"};
}

KineticEnsemble flock(std::size_t n, std::uint64_t seed) {
    KineticEnsemble e(n, 2);
    const NoiseStream s(seed, Purpose::test);
    for (std::size_t i = 0; i < 2 * n; ++i) {
        e.x[i] = s.normal(NoiseKey{0, static_cast<std::uint32_t>(i), 0, 0});
        e.v[i] = 1.0 + s.normal(NoiseKey{1, static_cast<std::uint32_t>(i), 0, 0});
    }
    return e;
}

Outcome flocking_invariants() {
    const auto h = AlignmentKernel::constant();
    auto full = flock(64, 5), batched = full;
    const auto m0 = full.mean_velocity();
    const double scale = std::hypot(m0[0], m0[1]);
    const NoiseStream noise(5, Purpose::partition);
    for (std::uint32_t s = 0; s < 1000; ++s) {
        full = flocking_full_step(full, h, 0.01);
        batched = flocking_rbm_step(batched, h, random_partition(64, 2, noise, s), 0.01);
    }
    double drift = 0.0;
    for (const auto* e : {&full, &batched}) {
        const auto m1 = e->mean_velocity();
        drift = std::max(drift, std::hypot(m1[0] - m0[0], m1[1] - m0[1]) / scale);
    }
    // Consensus: equal velocities are fixed by every stepper.
    KineticEnsemble cons(32, 2);
    for (std::size_t i = 0; i < 64; ++i) {
        cons.x[i] = double(i % 7);
        cons.v[i] = i % 2 ? -0.3 : 1.25;
    }
    bool consensus = true;
    const auto cs = AlignmentKernel::cucker_smale(0.5);
    consensus = consensus && flocking_full_step(cons, cs, 0.1).v == cons.v;
    consensus = consensus && flocking_full_step(cons, cs, 0.1, Normalization::by_n_minus_1).v == cons.v;
    consensus = consensus && flocking_rbm_step(cons, cs, random_partition(32, 4, noise, 0), 0.1).v == cons.v;

    // Mean-field map: the ensemble mean velocity only moves by sampling noise.
    const std::size_t M = 100000;
    KineticMeanField mf{flock(M, 6), 0, 2, 0.1, 2};
    const NoiseStream comp(6, Purpose::companion);
    const double start = mf.samples.mean_velocity()[0];
    double var_sum = 0.0;
    for (int k = 0; k < 100; ++k) {
        const auto next = qinf_step(mf, cs, comp);
        double mean = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < M; ++i) {
            const double dv = next.samples.v[2 * i] - mf.samples.v[2 * i];
            mean += dv;
            sq += dv * dv;
        }
        mean /= double(M);
        var_sum += (sq / double(M) - mean * mean) / double(M);
        mf = next;
    }
    const double drift_q = std::abs(mf.samples.mean_velocity()[0] - start);
    const double se = std::sqrt(var_sum);
    const bool ok = drift <= 1e-12 && consensus && drift_q < 3.0 * se;
    return {ok, "relative momentum drift " + fmt(drift) + " over 1000 steps; consensus fixed: " +
                    (consensus ? "yes" : "no") + "; mean-field drift " + fmt(drift_q) + " vs 3 SE " + fmt(3 * se)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"RBM strong error rate", strong_error},
        {"mean-field map vs Fokker-Planck rate", ginf_rate},
        {"one-step rate", one_step_rate},
        {"clean-particle probability rate", clean_rate},
        {"mean-field map contraction", contraction},
        {"mean-field limit rate in N", meanfield_rate},
        {"invariant measures", invariant},
        {"Fokker-Planck solver order", fp_order},
        {"Wasserstein oracle equivalence", wasserstein_oracles},
        {"exactness reductions", exactness},
        {"flocking invariants", flocking_invariants},
    };
    std::set<int> only;
    for (int a = 1; a < argc; ++a) only.insert(std::atoi(argv[a]));
    int failed = 0;
    for (std::size_t c = 0; c < criteria.size(); ++c) {
        const int id = int(c) + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[c].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[c].first << ": " << o.detail
                  << " (" << fmt(secs) << " s)" << std::endl;
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
