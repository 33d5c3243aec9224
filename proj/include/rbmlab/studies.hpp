#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rbmlab/ensemble.hpp"
#include "rbmlab/model.hpp"
#include "rbmlab/parallel.hpp"
#include "rbmlab/slope_fit.hpp"

namespace rbmlab {

inline constexpr const char* kVersion = "0.3.0";

/// Optional pass/fail thresholds carried in a study config.
struct Acceptance {
    std::optional<double> slope_min;
    std::optional<double> slope_max;
    /// Require the tabulated error to be monotone in tau within one combined SE.
    bool monotone = false;
};

struct StudyConfig {
    std::string study;
    std::string preset = "linear-strong";
    std::vector<std::size_t> N;
    std::vector<double> tau;
    std::size_t p = 2;
    double T = 1.0;
    std::size_t M = 10000;
    std::size_t n_substeps = 1;
    std::vector<std::uint64_t> seeds{1};
    std::string output = "out";

    InitialLaw initial = InitialLaw::gaussian(0.0, 1.0);
    /// Independent systems per N (meanfield_N) or partition sequences (clean_particles).
    std::size_t replicates = 64;
    /// Interval count for the clean-particle and chaos studies.
    std::size_t k = 3;
    /// One interval only (ginf_vs_fp).
    bool one_step = false;
    std::size_t fp_cells = 1024;
    double fp_half_width = 16.0;
    /// Reference solver step; <= 0 picks 0.9 of the admissible step.
    double fp_dt = 0.0;
    /// Long-time horizon for invariant measures.
    double T_long = 12.0;
    /// Stopping tolerance for the invariant-measure iteration.
    double tol = 0.01;
    /// Upper bound on the Euler substep; 0 leaves n_substeps as given.
    double max_substep = 0.0;
    std::vector<double> probe_points{-1.0, 0.0, 0.5, 1.0};
    unsigned threads = 1;
    Acceptance acceptance;

    /// Throws ConfigError on violated invariants (empty lists, tau <= 0, T < max tau, ...).
    void validate() const;
    /// n_substeps, raised when needed so tau / n stays within max_substep.
    std::size_t substeps_for(double tau) const;
};

StudyConfig parse_config(const nlohmann::json& j);
nlohmann::json to_json(const StudyConfig& cfg);
InitialLaw parse_law(const nlohmann::json& j);
nlohmann::json to_json(const InitialLaw& law);
nlohmann::json to_json(const SlopeFit& fit);

struct Check {
    std::string name;
    double value = 0.0;
    bool passed = true;
    std::string detail;
};

struct StudyReport {
    std::string study;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::optional<SlopeFit> fit;
    std::vector<Check> checks;
    nlohmann::json summary = nlohmann::json::object();

    bool passed() const;
};

/// Runs the study named in cfg.study. Throws NameError for unknown names.
StudyReport run_study(const StudyConfig& cfg);
std::vector<std::string> study_names();

StudyReport study_strong_rbm_error(const StudyConfig& cfg);
StudyReport study_ginf_vs_fp(const StudyConfig& cfg);
StudyReport study_meanfield_N(const StudyConfig& cfg);
StudyReport study_invariant_measures(const StudyConfig& cfg);
StudyReport study_batch_force_variance(const StudyConfig& cfg);
StudyReport study_clean_particles(const StudyConfig& cfg);
StudyReport study_contraction(const StudyConfig& cfg);

/// FNV-1a over the canonical JSON dump.
std::uint64_t config_hash(const StudyConfig& cfg);

/// Writes <dir>/<study>.csv and <dir>/<study>.json (summary, fit, checks, provenance).
void write_report(const StudyReport& report, const StudyConfig& cfg,
                  const std::filesystem::path& dir);

/// W_1 between two centred Gaussians with the given variances.
double gaussian_w1_same_mean(double v1, double v2);

/// Per-step W_1 between two coupled mean-field ensembles whose initial samples differ by
/// `shift`; ratios[k] = w1[k+1] / w1[k].
struct ContractionTrace {
    std::vector<double> w1;
    std::vector<double> ratios;
    double bound = 0.0;
};
ContractionTrace contraction_experiment(const ModelSpec& model, const InitialLaw& law, double shift,
                                        std::size_t p, double tau, std::size_t n_substeps,
                                        std::size_t m, std::size_t steps, std::uint64_t seed,
                                        Exec exec = {});

}  // namespace rbmlab
