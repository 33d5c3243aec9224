#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

#include "rbmlab/chaos.hpp"
#include "rbmlab/errors.hpp"
#include "rbmlab/fokker_planck.hpp"
#include "rbmlab/studies.hpp"
#include "rbmlab/wasserstein.hpp"

using namespace rbmlab;
using nlohmann::json;

namespace {

EmpiricalMeasure load_samples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    return EmpiricalMeasure::of(read_csv(in));
}

int cmd_run(const std::string& study, const std::string& config_path, const std::string& out,
            unsigned threads) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open " + config_path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    j["study"] = study;
    StudyConfig cfg = parse_config(j);
    if (threads) cfg.threads = threads;
    if (!out.empty()) cfg.output = out;
    const StudyReport report = run_study(cfg);
    write_report(report, cfg, cfg.output);
    if (report.fit)
        std::cout << study << ": slope " << report.fit->slope << " [" << report.fit->ci_low << ", "
                  << report.fit->ci_high << "]\n";
    for (const auto& c : report.checks)
        std::cout << (c.passed ? "pass " : "FAIL ") << c.name << " = " << c.value << " (" << c.detail << ")\n";
    return report.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random batch method experiments"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    std::string study, config, out;
    unsigned threads = 0;
    auto* run = app.add_subcommand("run", "Run a convergence study from a JSON config");
    run->add_option("study", study, "Study name")->required()->check(CLI::IsMember(study_names()));
    run->add_option("--config", config, "Config file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "Output directory");
    run->add_option("--threads", threads, "Worker threads");

    std::string file_a, file_b;
    double q = 1.0;
    auto* ws = app.add_subcommand("wasserstein", "W_q distance between two sample CSV files");
    ws->add_option("a", file_a)->required()->check(CLI::ExistingFile);
    ws->add_option("b", file_b)->required()->check(CLI::ExistingFile);
    ws->add_option("--q", q, "Order q >= 1")->check(CLI::Range(1.0, 1e9));

    std::string preset_name = "linear-strong";
    double T = 1.0, half_width = 16.0, dt = 0.0, mean0 = 0.0, var0 = 1.0;
    std::size_t cells = 1024;
    auto* fp = app.add_subcommand("fp", "Solve the mean-field Fokker-Planck equation; density CSV on stdout");
    fp->add_option("--preset", preset_name)->check(CLI::IsMember(preset_names()));
    fp->add_option("--T", T)->check(CLI::NonNegativeNumber);
    fp->add_option("--cells", cells);
    fp->add_option("--half-width", half_width);
    fp->add_option("--dt", dt, "Time step (0: automatic)");
    fp->add_option("--mean", mean0, "Initial Gaussian mean");
    fp->add_option("--variance", var0, "Initial Gaussian variance");

    std::size_t n = 64, p = 2, k = 3, replicates = 100000;
    std::uint64_t seed = 1;
    auto* ch = app.add_subcommand("chaos", "Estimate the probability that particle 1 is not clean");
    ch->add_option("--N", n);
    ch->add_option("--p", p);
    ch->add_option("--k", k);
    ch->add_option("--replicates", replicates);
    ch->add_option("--seed", seed);
    ch->add_flag("--exact", "Enumerate all partition sequences");
    ch->add_option("--threads", threads);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(study, config, out, threads);
        if (*ws) {
            const auto r = wasserstein(load_samples(file_a), load_samples(file_b), q);
            std::cout << json{{"q", r.q}, {"value", r.value}, {"method", to_string(r.method)},
                              {"n_mu", r.n_mu}, {"n_nu", r.n_nu}}.dump(2)
                      << '\n';
            return 0;
        }
        if (*fp) {
            const auto model = preset(preset_name);
            const auto traj = fp_solve(InitialLaw::gaussian(mean0, var0), model, T, dt, cells, half_width);
            const auto& rho = traj.snapshots.back();
            write_density_csv(std::cout, rho);
            std::cerr << json{{"t", rho.t}, {"mass", rho.mass()}, {"mean", rho.mean()},
                              {"variance", rho.variance()}, {"steps", traj.diagnostics.steps},
                              {"max_step_mass_defect", traj.diagnostics.max_step_mass_defect},
                              {"min_density", traj.diagnostics.min_density}}.dump()
                      << '\n';
            return 0;
        }
        if (*ch) {
            const auto r = ch->count("--exact") ? epsilon_exact(n, p, k)
                                                : epsilon_mc(n, p, k, replicates, seed, Exec{std::max(1u, threads)});
            write_clean_csv(std::cout, {r});
            return 0;
        }
    } catch (const FloorError& e) {
        std::cerr << "floor error: " << e.what() << '\n';
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
