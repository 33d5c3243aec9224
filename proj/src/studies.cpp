#include "rbmlab/studies.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "rbmlab/chaos.hpp"
#include "rbmlab/errors.hpp"
#include "rbmlab/fokker_planck.hpp"
#include "rbmlab/meanfield.hpp"
#include "rbmlab/rbm.hpp"
#include "rbmlab/wasserstein.hpp"

namespace rbmlab {

using nlohmann::json;

// ---------------------------------------------------------------- config

void StudyConfig::validate() const {
    if (tau.empty() && N.empty()) throw ConfigError("config needs a non-empty tau or N list");
    for (double t : tau)
        if (!(t > 0.0)) throw ConfigError("every tau must be positive");
    for (std::size_t n : N)
        if (n == 0) throw ConfigError("every N must be positive");
    if (!tau.empty() && !one_step && T < *std::max_element(tau.begin(), tau.end()))
        throw ConfigError("T must be >= max tau");
    if (seeds.empty()) throw ConfigError("config needs at least one seed");
    if (p < 2) throw ConfigError("p must be >= 2");
    if (n_substeps == 0) throw ConfigError("n_substeps must be >= 1");
    if (M == 0) throw ConfigError("M must be >= 1");
    if (max_substep < 0.0) throw ConfigError("max_substep must be >= 0");
    if (fp_cells < 2 || !(fp_half_width > 0.0)) throw ConfigError("invalid reference grid");
    initial.validate(1);
}

std::size_t StudyConfig::substeps_for(double t) const {
    if (!(max_substep > 0.0)) return n_substeps;
    const auto needed = static_cast<std::size_t>(std::ceil(t / max_substep - 1e-9));
    return std::max(n_substeps, needed);
}

InitialLaw parse_law(const json& j) {
    const std::string kind = j.value("kind", "gaussian");
    if (kind == "gaussian") return InitialLaw::gaussian(j.value("mean", 0.0), j.value("variance", 1.0));
    if (kind == "uniform") return InitialLaw::uniform(j.value("a", 0.0), j.value("b", 1.0));
    if (kind == "point") return InitialLaw::point(j.value("x0", 0.0));
    if (kind == "mixture") {
        std::vector<InitialLaw> comps;
        std::vector<double> w;
        for (const auto& c : j.at("components")) {
            comps.push_back(parse_law(c));
            w.push_back(c.value("weight", 1.0));
        }
        return InitialLaw::mixture(std::move(comps), std::move(w));
    }
    throw ConfigError("unknown initial law kind '" + kind + "'");
}

json to_json(const InitialLaw& law) {
    using K = InitialLaw::Kind;
    switch (law.kind) {
        case K::gaussian: return {{"kind", "gaussian"}, {"mean", law.mean[0]}, {"variance", law.variance[0]}};
        case K::uniform: return {{"kind", "uniform"}, {"a", law.lower[0]}, {"b", law.upper[0]}};
        case K::point: return {{"kind", "point"}, {"x0", law.location[0]}};
        case K::mixture: {
            json comps = json::array();
            for (std::size_t c = 0; c < law.components.size(); ++c) {
                json cj = to_json(law.components[c]);
                cj["weight"] = law.mixture_weights[c];
                comps.push_back(cj);
            }
            return {{"kind", "mixture"}, {"components", comps}};
        }
    }
    return {};
}

StudyConfig parse_config(const json& j) {
    StudyConfig c;
    try {
        c.study = j.at("study").get<std::string>();
        c.preset = j.value("preset", c.preset);
        c.N = j.value("N", c.N);
        c.tau = j.value("tau", c.tau);
        c.p = j.value("p", c.p);
        c.T = j.value("T", c.T);
        c.M = j.value("M", c.M);
        c.n_substeps = j.value("n_substeps", c.n_substeps);
        if (j.contains("seeds")) {
            if (j["seeds"].is_number_integer()) {
                c.seeds.clear();
                for (std::uint64_t s = 1; s <= j["seeds"].get<std::uint64_t>(); ++s) c.seeds.push_back(s);
            } else {
                c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
            }
        }
        c.output = j.value("output", c.output);
        if (j.contains("initial")) c.initial = parse_law(j["initial"]);
        c.replicates = j.value("replicates", c.replicates);
        c.k = j.value("k", c.k);
        c.one_step = j.value("one_step", c.one_step);
        if (j.contains("fp")) {
            const auto& f = j["fp"];
            c.fp_cells = f.value("cells", c.fp_cells);
            c.fp_half_width = f.value("half_width", c.fp_half_width);
            c.fp_dt = f.value("dt", c.fp_dt);
        }
        c.T_long = j.value("T_long", c.T_long);
        c.tol = j.value("tol", c.tol);
        c.max_substep = j.value("max_substep", c.max_substep);
        c.probe_points = j.value("probe_points", c.probe_points);
        c.threads = j.value("threads", c.threads);
        if (j.contains("acceptance")) {
            const auto& a = j["acceptance"];
            if (a.contains("slope_min")) c.acceptance.slope_min = a["slope_min"].get<double>();
            if (a.contains("slope_max")) c.acceptance.slope_max = a["slope_max"].get<double>();
            c.acceptance.monotone = a.value("monotone", false);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed study config: ") + e.what());
    }
    c.validate();
    return c;
}

json to_json(const StudyConfig& c) {
    json j = {{"study", c.study},       {"preset", c.preset},
              {"N", c.N},               {"tau", c.tau},
              {"p", c.p},               {"T", c.T},
              {"M", c.M},               {"n_substeps", c.n_substeps},
              {"seeds", c.seeds},       {"output", c.output},
              {"initial", to_json(c.initial)},
              {"replicates", c.replicates},
              {"k", c.k},               {"one_step", c.one_step},
              {"fp", {{"cells", c.fp_cells}, {"half_width", c.fp_half_width}, {"dt", c.fp_dt}}},
              {"T_long", c.T_long},     {"tol", c.tol},
              {"max_substep", c.max_substep},
              {"probe_points", c.probe_points},
              {"threads", c.threads}};
    json a = json::object();
    if (c.acceptance.slope_min) a["slope_min"] = *c.acceptance.slope_min;
    if (c.acceptance.slope_max) a["slope_max"] = *c.acceptance.slope_max;
    if (c.acceptance.monotone) a["monotone"] = true;
    j["acceptance"] = a;
    return j;
}

json to_json(const SlopeFit& f) {
    return {{"slope", f.slope},       {"intercept", f.intercept}, {"residual", f.residual},
            {"ci95", {f.ci_low, f.ci_high}}, {"log_x", f.log_x}, {"log_y", f.log_y},
            {"seed_slopes", f.seed_slopes}};
}

std::uint64_t config_hash(const StudyConfig& cfg) {
    const std::string s = to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

bool StudyReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

void write_report(const StudyReport& r, const StudyConfig& cfg, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream csv(dir / (r.study + ".csv"));
        if (!csv) throw ConfigError("cannot write to " + dir.string());
        for (std::size_t c = 0; c < r.columns.size(); ++c) csv << (c ? "," : "") << r.columns[c];
        csv << '\n';
        csv.precision(12);
        for (const auto& row : r.rows) {
            for (std::size_t c = 0; c < row.size(); ++c) csv << (c ? "," : "") << row[c];
            csv << '\n';
        }
    }
    json checks = json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name}, {"value", c.value}, {"passed", c.passed}, {"detail", c.detail}});
    std::ostringstream hash;
    hash << std::hex << config_hash(cfg);
    json out = {{"study", r.study},
                {"summary", r.summary},
                {"checks", checks},
                {"passed", r.passed()},
                {"provenance", {{"config", to_json(cfg)}, {"config_hash", hash.str()},
                                {"version", kVersion}, {"modules", {{"rbmlab", kVersion}}}}}};
    if (r.fit) out["fit"] = to_json(*r.fit);
    std::ofstream js(dir / (r.study + ".json"));
    js << out.dump(2) << '\n';
}

// ---------------------------------------------------------------- helpers

namespace {

double mean_of(std::span<const double> v) { return sample_mean(v); }

double sd_of(std::span<const double> v) { return std::sqrt(sample_variance(v)); }

std::vector<std::vector<double>> transpose(const std::vector<std::vector<double>>& a) {
    if (a.empty()) return {};
    std::vector<std::vector<double>> t(a[0].size(), std::vector<double>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j) t[j][i] = a[i][j];
    return t;
}

void add_slope_checks(StudyReport& r, const StudyConfig& cfg) {
    if (!r.fit) return;
    const auto& a = cfg.acceptance;
    if (a.slope_min || a.slope_max) {
        const double s = r.fit->slope;
        const bool ok = (!a.slope_min || s >= *a.slope_min) && (!a.slope_max || s <= *a.slope_max);
        std::ostringstream d;
        d << "window [" << (a.slope_min ? *a.slope_min : -INFINITY) << ", "
          << (a.slope_max ? *a.slope_max : INFINITY) << "]";
        r.checks.push_back({"slope", s, ok, d.str()});
    }
}

/// b(x) = -a x with K = -kappa z: FP variance at time t from v0.
double linear_fp_variance(const LinearCoefficients& c, double sigma, double v0, double t) {
    const double lam = c.a + c.kappa;
    const double s2 = sigma * sigma;
    if (lam == 0.0) return v0 + 2.0 * s2 * t;
    return v0 * std::exp(-2.0 * lam * t) + s2 / lam * (1.0 - std::exp(-2.0 * lam * t));
}

bool centred_gaussian(const InitialLaw& law) {
    return law.kind == InitialLaw::Kind::gaussian && law.mean[0] == 0.0;
}

ModelSpec without_interaction(const ModelSpec& m) {
    ModelParams p = m.params();
    p.name = m.name() + "-no-interaction";
    p.kernel = Kernel::zero();
    p.kernel_lipschitz = 0.0;
    return ModelSpec(p);
}

std::vector<double> substep_times(std::size_t intervals, double tau, std::size_t n_sub) {
    std::vector<double> t;
    t.reserve(intervals * n_sub);
    const double dt = tau / static_cast<double>(n_sub);
    for (std::size_t k = 0; k < intervals; ++k)
        for (std::size_t j = 0; j < n_sub; ++j)
            t.push_back(static_cast<double>(k) * tau + static_cast<double>(j) * dt);
    return t;
}

}  // namespace

double gaussian_w1_same_mean(double v1, double v2) {
    return std::abs(std::sqrt(v1) - std::sqrt(v2)) * std::sqrt(2.0 / std::numbers::pi);
}

// ---------------------------------------------------------------- strong error

StudyReport study_strong_rbm_error(const StudyConfig& cfg) {
    cfg.validate();
    if (cfg.N.empty()) throw ConfigError("strong_rbm_error needs N");
    const auto model = preset(cfg.preset);
    const std::size_t n = cfg.N.front();
    const Exec exec{cfg.threads};
    StudyReport r;
    r.study = "strong_rbm_error";
    r.columns = {"tau", "error", "stderr", "argmax_time"};
    std::vector<double> taus = cfg.tau, errs, ses;
    std::vector<std::vector<double>> per_seed_err;  // [tau][seed]
    for (double tau : taus) {
        const RbmConfig rc{cfg.p, tau, cfg.T, cfg.substeps_for(tau)};
        std::vector<std::vector<double>> ms;  // [seed][k]
        for (auto seed : cfg.seeds) {
            const auto rbm = run_rbm(model, cfg.initial, n, rc, seed, 0, exec);
            const auto full = run_full_system(model, cfg.initial, n, rc, seed, 0, exec);
            std::vector<double> row;
            for (std::size_t k = 0; k < full.size(); ++k) {
                double acc = 0.0;
                for (std::size_t i = 0; i < full[k].x.size(); ++i) {
                    const double dlt = rbm.trajectory[k].x[i] - full[k].x[i];
                    acc += dlt * dlt;
                }
                row.push_back(acc / static_cast<double>(n));
            }
            ms.push_back(std::move(row));
        }
        const std::size_t kk = ms[0].size();
        std::size_t best = 0;
        double best_ms = -1.0;
        for (std::size_t k = 0; k < kk; ++k) {
            double m = 0.0;
            for (const auto& row : ms) m += row[k];
            m /= static_cast<double>(ms.size());
            if (m > best_ms) {
                best_ms = m;
                best = k;
            }
        }
        const double err = std::sqrt(std::max(best_ms, 0.0));
        std::vector<double> at_best, seed_err;
        for (const auto& row : ms) {
            at_best.push_back(row[best]);
            seed_err.push_back(std::sqrt(*std::max_element(row.begin(), row.end())));
        }
        const double se = err > 0.0 && ms.size() > 1
                              ? sd_of(at_best) / std::sqrt(static_cast<double>(ms.size())) / (2.0 * err)
                              : 0.0;
        errs.push_back(err);
        ses.push_back(se);
        per_seed_err.push_back(seed_err);
        r.rows.push_back({tau, err, se, static_cast<double>(best) * tau});
    }
    const bool positive = std::all_of(errs.begin(), errs.end(), [](double e) { return e > 0.0; });
    if (positive && taus.size() >= 3) {
        r.fit = fit_loglog_replicated(taus, errs, transpose(per_seed_err));
        add_slope_checks(r, cfg);
    } else {
        r.summary["note"] = "errors at the floating-point floor; no slope fitted";
    }
    // Monotonicity: a smaller tau never increases the error beyond one combined SE.
    std::vector<std::size_t> order(taus.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return taus[a] > taus[b]; });
    double worst = -INFINITY;
    for (std::size_t q = 1; q < order.size(); ++q) {
        const auto big = order[q - 1], small = order[q];
        const double excess = errs[small] - errs[big] - std::hypot(ses[small], ses[big]);
        worst = std::max(worst, excess);
    }
    const bool mono = order.size() < 2 || worst <= 0.0;
    if (cfg.acceptance.monotone) r.checks.push_back({"monotone", worst, mono, "max excess over 1 SE"});
    r.summary["N"] = n;
    r.summary["p"] = cfg.p;
    r.summary["n_substeps"] = cfg.n_substeps;
    r.summary["max_substep"] = cfg.max_substep;
    r.summary["seeds"] = cfg.seeds.size();
    r.summary["monotone_within_1se"] = mono;
    r.summary["coupling"] = "shared Brownian keys between RBM and full system";
    return r;
}

// ---------------------------------------------------------------- G_inf vs FP

StudyReport study_ginf_vs_fp(const StudyConfig& cfg) {
    cfg.validate();
    const auto model = preset(cfg.preset);
    if (model.dimension() != 1) throw DimensionError("ginf_vs_fp needs d = 1");
    const Exec exec{cfg.threads};
    const auto lin = linear_coefficients(model);
    StudyReport r;
    r.study = cfg.one_step ? "ginf_vs_fp_one_step" : "ginf_vs_fp";
    r.columns = {"tau",           "intervals",       "w1_coupled",    "w1_coupled_se",
                 "w1_coupled_quarter_M", "w1_direct", "w1_reference_vs_grid", "w1_oracle"};
    const GridDensity rho0 = density_from_law(cfg.initial, cfg.fp_cells, cfg.fp_half_width);
    std::vector<double> taus = cfg.tau, signal, floors;
    std::vector<std::vector<double>> per_seed;  // [tau][seed]
    json oracle = json::array();
    for (double tau : taus) {
        const std::size_t K = cfg.one_step ? 1 : interval_count(cfg.T, tau);
        const std::size_t n_sub = cfg.substeps_for(tau);
        const auto times = substep_times(K, tau, n_sub);
        GridDensity rhoT;
        const auto tables = mean_force_path(rho0, model, times, cfg.fp_dt, &rhoT);
        advance_to(rhoT, model, static_cast<double>(K) * tau, cfg.fp_dt);
        MeanFieldConfig mc;
        mc.p = cfg.p;
        mc.tau = tau;
        mc.n_substeps = n_sub;
        std::vector<double> ypool, xpool, yq, xq, seed_w;
        for (auto seed : cfg.seeds) {
            const NoiseStream noise(seed, Purpose::brownian);
            MeanFieldEnsemble y = make_meanfield(cfg.initial, cfg.M, mc, seed);
            std::vector<double> x = y.y;
            for (std::size_t k = 0; k < K; ++k) {
                y = ginf_step(y, model, noise, exec);
                frozen_force_interval(
                    x, model,
                    std::span<const ForceTable>(tables.data() + k * n_sub, n_sub),
                    tau, noise, k, mc.slot_key(0), exec);
            }
            seed_w.push_back(w_q_samples(y.y, x, 1.0));
            const std::size_t quarter = std::max<std::size_t>(1, cfg.M / 4);
            yq.insert(yq.end(), y.y.begin(), y.y.begin() + static_cast<std::ptrdiff_t>(quarter));
            xq.insert(xq.end(), x.begin(), x.begin() + static_cast<std::ptrdiff_t>(quarter));
            ypool.insert(ypool.end(), y.y.begin(), y.y.end());
            xpool.insert(xpool.end(), x.begin(), x.end());
        }
        std::sort(ypool.begin(), ypool.end());
        std::sort(xpool.begin(), xpool.end());
        const double w = w_q_sorted(ypool, xpool, 1.0);
        const double wq = w_q_samples(yq, xq, 1.0);
        const double direct = w_q_samples_vs_grid(ypool, rhoT, 1.0);
        const double ref = w_q_samples_vs_grid(xpool, rhoT, 1.0);
        const double se = seed_w.size() > 1 ? sd_of(seed_w) / std::sqrt(double(seed_w.size())) : 0.0;
        double w_or = NAN;
        if (lin && centred_gaussian(cfg.initial)) {
            const double v0 = cfg.initial.variance[0];
            const auto g = gaussian_oracle(model, cfg.p, tau, {0.0, v0}, K);
            const double vf = linear_fp_variance(*lin, model.sigma(), v0, static_cast<double>(K) * tau);
            w_or = gaussian_w1_same_mean(g.variance, vf);
            oracle.push_back({{"tau", tau}, {"ginf_variance", g.variance}, {"fp_variance", vf},
                              {"w1", w_or}, {"grid_variance", rhoT.variance()}});
        }
        signal.push_back(w);
        floors.push_back(se);
        per_seed.push_back(seed_w);
        r.rows.push_back({tau, static_cast<double>(K), w, se, wq, direct, ref, w_or});
    }
    if (cfg.seeds.size() > 1) {
        const double worst_floor = *std::max_element(floors.begin(), floors.end());
        const double smallest = *std::min_element(signal.begin(), signal.end());
        if (worst_floor > 0.5 * smallest) {
            const double factor = std::pow(worst_floor / (0.5 * smallest), 2.0);
            throw FloorError("Monte Carlo floor " + std::to_string(worst_floor) +
                                 " exceeds half the smallest signal " + std::to_string(smallest),
                             static_cast<std::size_t>(std::ceil(double(cfg.M) * factor)));
        }
    }
    if (taus.size() >= 3) {
        r.fit = fit_loglog_replicated(taus, signal, transpose(per_seed));
        add_slope_checks(r, cfg);
    }
    r.summary["estimator"] =
        "W1 between the pooled mean-field samples and a synchronously coupled reference driven "
        "by the grid mean force (shared initial draws and slot-0 Brownian keys)";
    r.summary["M_per_seed"] = cfg.M;
    r.summary["seeds"] = cfg.seeds.size();
    r.summary["n_substeps"] = cfg.n_substeps;
    r.summary["max_substep"] = cfg.max_substep;
    r.summary["fp_cells"] = cfg.fp_cells;
    if (!oracle.empty()) {
        r.summary["linear_gaussian_reference"] = oracle;
        std::vector<double> ow;
        for (const auto& o : oracle) ow.push_back(o["w1"].get<double>());
        if (taus.size() >= 3 && std::all_of(ow.begin(), ow.end(), [](double v) { return v > 0.0; }))
            r.summary["reference_slope"] = fit_loglog(taus, ow).slope;
    }
    return r;
}

// ---------------------------------------------------------------- mean-field in N

StudyReport study_meanfield_N(const StudyConfig& cfg) {
    cfg.validate();
    if (cfg.N.size() < 3) throw ConfigError("meanfield_N needs at least 3 values of N");
    const auto model = preset(cfg.preset);
    if (model.dimension() != 1) throw DimensionError("meanfield_N needs d = 1");
    const Exec exec{cfg.threads};
    const double dt = cfg.tau.empty() ? 0.01 : cfg.tau.front() / static_cast<double>(cfg.substeps_for(cfg.tau.front()));
    const std::size_t steps = interval_count(cfg.T, dt);
    StudyReport r;
    r.study = "meanfield_N";
    r.columns = {"N", "w2_pooled", "w2_pooled_se", "coupling_rms", "w2_particle1", "w2_control"};

    auto run = [&](const ModelSpec& m, bool with_reference, std::size_t n, std::uint64_t seed,
                   std::vector<double>& pooled, std::vector<double>& first, double& coupling_ms) {
        const NoiseStream noise(seed, Purpose::brownian);
        GridDensity rho0 = density_from_law(cfg.initial, cfg.fp_cells, cfg.fp_half_width);
        std::vector<ForceTable> tables;
        if (with_reference) {
            std::vector<double> times(steps);
            for (std::size_t s = 0; s < steps; ++s) times[s] = static_cast<double>(s) * dt;
            tables = mean_force_path(rho0, m, times, cfg.fp_dt);
        }
        double acc = 0.0;
        for (std::size_t rep = 0; rep < cfg.replicates; ++rep) {
            const auto rid = static_cast<std::uint32_t>(rep);
            Ensemble e = init_iid(cfg.initial, n, seed, 1, rid);
            std::vector<double> xbar = e.x;
            for (std::size_t s = 0; s < steps; ++s) {
                e = full_system_step(e, m, dt, noise, StepIndex{rid, static_cast<std::uint32_t>(s), 0}, exec);
                if (with_reference)
                    frozen_force_interval(xbar, m, std::span<const ForceTable>(&tables[s], 1), dt, noise,
                                          s, rid, exec);
            }
            pooled.insert(pooled.end(), e.x.begin(), e.x.end());
            first.push_back(e.x[0]);
            if (with_reference)
                for (std::size_t i = 0; i < n; ++i) acc += (e.x[i] - xbar[i]) * (e.x[i] - xbar[i]);
        }
        coupling_ms = acc / static_cast<double>(n * cfg.replicates);
    };

    GridDensity rhoT = density_from_law(cfg.initial, cfg.fp_cells, cfg.fp_half_width);
    advance_to(rhoT, model, static_cast<double>(steps) * dt, cfg.fp_dt);
    const ModelSpec control = without_interaction(model);
    GridDensity rhoC = density_from_law(cfg.initial, cfg.fp_cells, cfg.fp_half_width);
    advance_to(rhoC, control, static_cast<double>(steps) * dt, cfg.fp_dt);

    std::vector<double> ns, w2, coup, ctrl;
    std::vector<std::vector<double>> per_seed;
    for (std::size_t n : cfg.N) {
        if (n < 2) throw ConfigError("N must be >= 2");
        std::vector<double> seed_w, pooled_all, first_all;
        double coupling_sum = 0.0;
        for (auto seed : cfg.seeds) {
            std::vector<double> pooled, first;
            double cms = 0.0;
            run(model, !model.kernel().is_zero(), n, seed, pooled, first, cms);
            coupling_sum += cms;
            std::sort(pooled.begin(), pooled.end());
            seed_w.push_back(w_q_samples_vs_grid(pooled, rhoT, 2.0));
            pooled_all.insert(pooled_all.end(), pooled.begin(), pooled.end());
            first_all.insert(first_all.end(), first.begin(), first.end());
        }
        std::vector<double> cpool, cfirst;
        double dummy = 0.0;
        run(control, false, n, cfg.seeds.front(), cpool, cfirst, dummy);
        std::sort(cpool.begin(), cpool.end());
        const double wc = w_q_samples_vs_grid(cpool, rhoC, 2.0);
        const double w = mean_of(seed_w);
        const double se = seed_w.size() > 1 ? sd_of(seed_w) / std::sqrt(double(seed_w.size())) : 0.0;
        const double c = std::sqrt(coupling_sum / static_cast<double>(cfg.seeds.size()));
        std::sort(first_all.begin(), first_all.end());
        const double w1st = w_q_samples_vs_grid(first_all, rhoT, 2.0);
        ns.push_back(static_cast<double>(n));
        w2.push_back(w);
        coup.push_back(c);
        ctrl.push_back(wc);
        per_seed.push_back(seed_w);
        r.rows.push_back({double(n), w, se, c, w1st, wc});
    }
    r.fit = fit_loglog_replicated(ns, w2, transpose(per_seed));
    add_slope_checks(r, cfg);
    r.summary["estimator"] =
        "W2 between the pooled positions of all particles of R independent systems and the "
        "reference density; particles are exchangeable so each has the one-particle marginal";
    r.summary["replicates"] = cfg.replicates;
    r.summary["dt"] = dt;
    if (std::all_of(coup.begin(), coup.end(), [](double v) { return v > 0.0; }))
        r.summary["coupling_slope"] = fit_loglog(ns, coup).slope;
    r.summary["control_slope"] = fit_loglog(ns, ctrl).slope;
    // Chaos route: epsilon_k in N for the same p.
    bool divisible = std::all_of(cfg.N.begin(), cfg.N.end(), [&](std::size_t n) { return n % cfg.p == 0; });
    if (divisible && cfg.k >= 2) {
        std::vector<double> eps;
        for (std::size_t n : cfg.N)
            eps.push_back(epsilon_mc(n, cfg.p, cfg.k, 100000, cfg.seeds.front(), exec).epsilon);
        r.summary["epsilon_k"] = eps;
        if (std::all_of(eps.begin(), eps.end(), [](double v) { return v > 0.0; }))
            r.summary["epsilon_slope"] = fit_loglog(ns, eps).slope;
    }
    return r;
}

// ---------------------------------------------------------------- invariant measures

StudyReport study_invariant_measures(const StudyConfig& cfg) {
    cfg.validate();
    const auto model = preset(cfg.preset);
    if (model.dimension() != 1) throw DimensionError("invariant_measures needs d = 1");
    const Exec exec{cfg.threads};
    const auto lin = linear_coefficients(model);
    StudyReport r;
    r.study = "invariant_measures";
    r.columns = {"tau", "w1_coupled", "w1_coupled_se", "w1_direct", "variance", "variance_se",
                 "oracle_variance", "oracle_w1", "steps"};
    GridDensity pi = density_from_law(cfg.initial, cfg.fp_cells, cfg.fp_half_width);
    advance_to(pi, model, cfg.T_long, cfg.fp_dt);
    const double fp_var = pi.variance();
    const ForceTable force = mean_force_on_grid(pi, model);
    std::vector<double> taus = cfg.tau, signal, oracle_gap;
    std::vector<std::vector<double>> per_seed;
    bool variance_ok = true;
    for (double tau : taus) {
        MeanFieldConfig mc;
        mc.p = cfg.p;
        mc.tau = tau;
        mc.n_substeps = cfg.substeps_for(tau);
        const std::vector<ForceTable> tables(mc.n_substeps, force);
        std::vector<double> ypool, xpool, seed_w, seed_var;
        std::size_t steps_used = 0;
        for (auto seed : cfg.seeds) {
            const NoiseStream noise(seed, Purpose::brownian);
            MeanFieldEnsemble y0 = make_meanfield(cfg.initial, cfg.M, mc, seed);
            std::vector<double> x = y0.y;
            auto advance_reference = [&](const MeanFieldEnsemble& ens, double) {
                frozen_force_interval(x, model, tables, tau, noise, ens.k - 1, mc.slot_key(0), exec);
            };
            const std::size_t budget = 20 * interval_count(cfg.T_long, tau) + 100;
            auto res = iterate_to_invariant(y0, model, noise, cfg.tol, budget, exec, advance_reference);
            MeanFieldEnsemble y = std::move(res.ensemble);
            // Burn-in floor: the iteration may stop before time T.
            while (y.t < cfg.T - 1e-12) {
                y = ginf_step(y, model, noise, exec);
                advance_reference(y, 0.0);
            }
            steps_used = std::max(steps_used, y.k);
            seed_w.push_back(w_q_samples(y.y, x, 1.0));
            seed_var.push_back(sample_variance(y.y));
            ypool.insert(ypool.end(), y.y.begin(), y.y.end());
            xpool.insert(xpool.end(), x.begin(), x.end());
        }
        std::sort(ypool.begin(), ypool.end());
        std::sort(xpool.begin(), xpool.end());
        const double w = w_q_sorted(ypool, xpool, 1.0);
        const double direct = w_q_samples_vs_grid(ypool, pi, 1.0);
        const double s = double(cfg.seeds.size());
        const double se = seed_w.size() > 1 ? sd_of(seed_w) / std::sqrt(s) : 0.0;
        const double var = mean_of(seed_var);
        // Seed scatter when replicated; otherwise the Gaussian sampling formula.
        const double var_se = seed_var.size() > 1
                                  ? sd_of(seed_var) / std::sqrt(s)
                                  : var * std::sqrt(2.0 / (double(cfg.M) - 1.0));
        double ov = NAN, ow = NAN;
        if (lin) {
            ov = gaussian_fixed_point(model, cfg.p, tau).variance;
            const double pv = model.sigma() * model.sigma() / (lin->a + lin->kappa);
            ow = gaussian_w1_same_mean(ov, pv);
            oracle_gap.push_back(std::abs(ov - pv));
            const bool ok = std::abs(var - ov) <= 3.0 * var_se;
            variance_ok = variance_ok && ok;
        }
        signal.push_back(w);
        per_seed.push_back(seed_w);
        r.rows.push_back({tau, w, se, direct, var, var_se, ov, ow, double(steps_used)});
    }
    if (taus.size() >= 3) {
        r.fit = fit_loglog_replicated(taus, signal, transpose(per_seed));
        add_slope_checks(r, cfg);
    }
    r.summary["fp_stationary_variance"] = fp_var;
    r.summary["fp_horizon"] = cfg.T_long;
    if (lin) {
        const double pv = model.sigma() * model.sigma() / (lin->a + lin->kappa);
        r.summary["analytic_stationary_variance"] = pv;
        r.summary["fp_variance_rel_error"] = std::abs(fp_var - pv) / pv;
        r.summary["variance_within_3se_of_oracle"] = variance_ok;
        if (taus.size() >= 3 && std::all_of(oracle_gap.begin(), oracle_gap.end(), [](double g) { return g > 0; }))
            r.summary["oracle_gap_slope"] = fit_loglog(taus, oracle_gap).slope;
        r.checks.push_back({"fp_stationary_variance", std::abs(fp_var - pv) / pv,
                            std::abs(fp_var - pv) / pv <= 0.005, "relative error <= 0.5%"});
        r.checks.push_back({"ginf_variance_vs_oracle", variance_ok ? 1.0 : 0.0, variance_ok,
                            "within 3 standard errors at every tau"});
    }
    r.summary["estimator"] =
        "W1 between the mean-field ensemble at stationarity and a synchronously coupled "
        "reference driven by the stationary grid mean force";
    return r;
}

// ---------------------------------------------------------------- batch force

StudyReport study_batch_force_variance(const StudyConfig& cfg) {
    cfg.validate();
    const auto model = preset(cfg.preset);
    if (model.dimension() != 1) throw DimensionError("batch_force_variance needs d = 1");
    const std::uint64_t seed = cfg.seeds.front();
    const Ensemble pool = init_iid(cfg.initial, cfg.M, seed);
    const std::size_t p = cfg.p;
    const double inv = 1.0 / static_cast<double>(p - 1);
    const NoiseStream draws(seed, Purpose::companion);
    StudyReport r;
    r.study = "batch_force_variance";
    r.columns = {"kind", "x_or_tau", "value", "stderr", "expected"};
    const double pop_var = sample_variance(pool.x) * double(cfg.M - 1) / double(cfg.M);
    const auto lin = linear_coefficients(model);
    const std::size_t B = cfg.replicates;
    bool mean_ok = true, var_ok = true;
    json probes = json::array();
    visit_kernel(model.kernel(), [&](auto fn) {
        for (std::size_t q = 0; q < cfg.probe_points.size(); ++q) {
            const double x = cfg.probe_points[q];
            CounterRng rng(draws, NoiseKey{1, static_cast<std::uint32_t>(q), 0, 0});
            std::vector<double> f(B);
            for (std::size_t b = 0; b < B; ++b) {
                double acc = 0.0;
                for (std::size_t j = 0; j + 1 < p; ++j) {
                    const double z = x - pool.x[rng.below(cfg.M)];
                    double kv;
                    fn(&z, &kv, 1);
                    acc += kv;
                }
                f[b] = inv * acc;
            }
            const double m = mean_of(f), v = sample_variance(f);
            const double exact_mean = mean_force(pool, model, std::span<const double>(&x, 1))[0];
            const double se_m = std::sqrt(v / double(B));
            double m4 = 0.0;
            for (double val : f) m4 += std::pow(val - m, 4.0);
            m4 /= double(B);
            const double se_v = std::sqrt(std::max(m4 - v * v, 0.0) / double(B));
            double expected_v = NAN;
            if (lin) expected_v = lin->kappa * lin->kappa * pop_var * inv;
            const bool mok = v == 0.0 ? m == exact_mean : std::abs(m - exact_mean) <= 3.0 * se_m;
            const bool vok = !lin || (v == 0.0 ? expected_v == 0.0 : std::abs(v - expected_v) <= 3.0 * se_v);
            mean_ok = mean_ok && mok;
            var_ok = var_ok && vok;
            r.rows.push_back({0.0, x, m, se_m, exact_mean});
            r.rows.push_back({1.0, x, v, se_v, expected_v});
            probes.push_back({{"x", x}, {"mean", m}, {"mean_force", exact_mean}, {"variance", v},
                              {"variance_se", se_v}, {"expected_variance", expected_v}});
        }
    });
    r.checks.push_back({"batch_force_mean", mean_ok ? 1.0 : 0.0, mean_ok, "within 3 SE of mean_force"});
    if (lin) r.checks.push_back({"batch_force_variance", var_ok ? 1.0 : 0.0, var_ok, "kappa^2 Var(Y)/(p-1) within 3 SE"});

    // One interval of two frozen-force systems: mean force versus batch force, shared noise.
    double lo = *std::min_element(pool.x.begin(), pool.x.end()) - 2.0;
    double hi = *std::max_element(pool.x.begin(), pool.x.end()) + 2.0;
    ForceTable table{lo, (hi - lo) / 511.0, std::vector<double>(512)};
    for (std::size_t g = 0; g < 512; ++g) {
        const double xg = lo + double(g) * table.dx;
        table.values[g] = mean_force(pool, model, std::span<const double>(&xg, 1))[0];
    }
    std::vector<double> taus = cfg.tau, gaps;
    const NoiseStream noise(seed, Purpose::brownian);
    const double s2 = model.sigma() * model.sigma();
    for (double tau : taus) {
        const auto plan = StepPlan::for_interval(tau, cfg.substeps_for(tau));
        const double amp = std::sqrt(2.0 * s2 * plan.dt);
        double acc = 0.0;
        visit_kernel(model.kernel(), [&](auto fn) {
            std::vector<double> comp(p - 1);
            for (std::size_t i = 0; i < cfg.M; ++i) {
                CounterRng rng(draws, NoiseKey{2, static_cast<std::uint32_t>(i), 0, 0});
                for (auto& c : comp) c = pool.x[rng.below(cfg.M)];
                double xa = pool.x[i], xb = pool.x[i], b;
                for (std::size_t j = 0; j < plan.n_substeps; ++j) {
                    const double xi = noise.normal(NoiseKey{0, static_cast<std::uint32_t>(i), 0,
                                                            static_cast<std::uint32_t>(j)});
                    model.drift()(std::span<const double>(&xa, 1), std::span<double>(&b, 1));
                    const double fa = b + table(xa);
                    model.drift()(std::span<const double>(&xb, 1), std::span<double>(&b, 1));
                    double kb = 0.0;
                    for (double c : comp) {
                        const double z = xb - c;
                        double kv;
                        fn(&z, &kv, 1);
                        kb += kv;
                    }
                    const double fb = b + inv * kb;
                    xa += fa * plan.dt + amp * xi;
                    xb += fb * plan.dt + amp * xi;
                }
                acc += (xa - xb) * (xa - xb);
            }
        });
        const double gap = std::sqrt(acc / double(cfg.M));
        gaps.push_back(gap);
        r.rows.push_back({2.0, tau, gap, 0.0, NAN});
    }
    if (taus.size() >= 3 && std::all_of(gaps.begin(), gaps.end(), [](double g) { return g > 0.0; })) {
        r.fit = fit_loglog(taus, gaps);
        add_slope_checks(r, cfg);
    }
    r.summary["probes"] = probes;
    r.summary["rms_gap"] = gaps;
    r.summary["kind_codes"] = {{"0", "batch force mean"}, {"1", "batch force variance"}, {"2", "rms gap after one interval"}};
    r.summary["pool_variance"] = pop_var;
    return r;
}

// ---------------------------------------------------------------- clean particles

StudyReport study_clean_particles(const StudyConfig& cfg) {
    cfg.validate();
    if (cfg.N.size() < 3) throw ConfigError("clean_particles needs at least 3 values of N");
    const Exec exec{cfg.threads};
    StudyReport r;
    r.study = "clean_particles";
    r.columns = {"N", "p", "k", "epsilon", "stderr"};
    std::vector<double> ns, eps;
    for (std::size_t n : cfg.N) {
        const auto rep = epsilon_mc(n, cfg.p, cfg.k, cfg.replicates, cfg.seeds.front(), exec);
        ns.push_back(double(n));
        eps.push_back(rep.epsilon);
        r.rows.push_back({double(n), double(cfg.p), double(cfg.k), rep.epsilon, rep.standard_error});
    }
    if (std::all_of(eps.begin(), eps.end(), [](double e) { return e > 0.0; })) {
        r.fit = fit_loglog(ns, eps);
        add_slope_checks(r, cfg);
    }
    json exact = json::array();
    for (std::size_t n : {4u, 6u, 8u}) {
        if (n % cfg.p != 0) continue;
        for (std::size_t k = 2; k <= cfg.k; ++k) {
            try {
                const auto e = epsilon_exact(n, cfg.p, k);
                const auto m = epsilon_mc(n, cfg.p, k, cfg.replicates, cfg.seeds.front(), exec);
                const double z = m.standard_error > 0 ? (m.epsilon - e.epsilon) / m.standard_error : 0.0;
                exact.push_back({{"N", n}, {"k", k}, {"exact", e.epsilon}, {"mc", m.epsilon},
                                 {"mc_se", m.standard_error}, {"z", z}});
            } catch (const SizeError&) {
            }
        }
    }
    r.summary["exact_vs_mc"] = exact;
    r.summary["replicates"] = cfg.replicates;
    return r;
}

// ---------------------------------------------------------------- contraction

ContractionTrace contraction_experiment(const ModelSpec& model, const InitialLaw& law, double shift,
                                        std::size_t p, double tau, std::size_t n_substeps,
                                        std::size_t m, std::size_t steps, std::uint64_t seed,
                                        Exec exec) {
    if (model.dimension() != 1) throw DimensionError("contraction experiment needs d = 1");
    MeanFieldConfig mc;
    mc.p = p;
    mc.tau = tau;
    mc.n_substeps = n_substeps;
    MeanFieldEnsemble a = make_meanfield(law, m, mc, seed);
    MeanFieldEnsemble b = a;
    for (double& v : b.y) v += shift;
    const NoiseStream noise(seed, Purpose::brownian);
    ContractionTrace tr;
    tr.w1.push_back(w_q_samples(a.y, b.y, 1.0));
    for (std::size_t s = 0; s < steps; ++s) {
        a = ginf_step(a, model, noise, exec);
        b = ginf_step(b, model, noise, exec);
        tr.w1.push_back(w_q_samples(a.y, b.y, 1.0));
        tr.ratios.push_back(tr.w1[s] > 0.0 ? tr.w1[s + 1] / tr.w1[s] : 0.0);
    }
    const double rate = model.regime() == Regime::strong
                            ? -(model.confinement_rate() - 2.0 * model.kernel_lipschitz())
                            : model.params().one_sided_lipschitz + 2.0 * model.kernel_lipschitz();
    tr.bound = std::exp(rate * tau);
    return tr;
}

StudyReport study_contraction(const StudyConfig& cfg) {
    cfg.validate();
    const auto model = preset(cfg.preset);
    const double tau = cfg.tau.empty() ? 0.1 : cfg.tau.front();
    const std::size_t steps = interval_count(cfg.T, tau);
    const auto tr = contraction_experiment(model, cfg.initial, 2.0, cfg.p, tau, cfg.substeps_for(tau),
                                           cfg.M, steps, cfg.seeds.front(), Exec{cfg.threads});
    StudyReport r;
    r.study = "contraction";
    r.columns = {"step", "w1", "ratio", "bound"};
    for (std::size_t s = 0; s < tr.w1.size(); ++s)
        r.rows.push_back({double(s), tr.w1[s], s ? tr.ratios[s - 1] : NAN, tr.bound});
    const double worst = tr.ratios.empty() ? 0.0 : *std::max_element(tr.ratios.begin(), tr.ratios.end());
    r.checks.push_back({"max_ratio", worst, worst <= tr.bound * 1.05, "<= bound x 1.05"});
    r.summary["bound"] = tr.bound;
    r.summary["max_ratio"] = worst;
    r.summary["coupling"] = "shifted copies of one initial sample; identical companions and noise";
    return r;
}

// ---------------------------------------------------------------- dispatch

std::vector<std::string> study_names() {
    return {"strong_rbm_error", "ginf_vs_fp",      "meanfield_N", "invariant_measures",
            "batch_force_variance", "clean_particles", "contraction"};
}

StudyReport run_study(const StudyConfig& cfg) {
    const auto& s = cfg.study;
    if (s == "strong_rbm_error") return study_strong_rbm_error(cfg);
    if (s == "ginf_vs_fp") return study_ginf_vs_fp(cfg);
    if (s == "meanfield_N") return study_meanfield_N(cfg);
    if (s == "invariant_measures") return study_invariant_measures(cfg);
    if (s == "batch_force_variance") return study_batch_force_variance(cfg);
    if (s == "clean_particles") return study_clean_particles(cfg);
    if (s == "contraction") return study_contraction(cfg);
    throw NameError("unknown study '" + s + "'");
}

}  // namespace rbmlab
