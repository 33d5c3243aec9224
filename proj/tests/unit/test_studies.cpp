#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "rbmlab/errors.hpp"
#include "rbmlab/studies.hpp"

using namespace rbmlab;
using nlohmann::json;

TEST_CASE("config parsing and validation") {
    const auto c = parse_config(json::parse(R"({"study":"ginf_vs_fp","tau":[0.2,0.1],"seeds":3,
        "initial":{"kind":"gaussian","mean":0,"variance":4},"fp":{"cells":256}})"));
    CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(c.initial.variance[0] == 4.0);
    CHECK(c.fp_cells == 256);
    CHECK(parse_config(to_json(c)).tau == c.tau);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"study":"x","tau":[0.5],"T":0.1})")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"study":"x","tau":[-1]})")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"study":"x","tau":[]})")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"tau":[0.1]})")), ConfigError);
    StudyConfig bad = c;
    bad.study = "unknown";
    CHECK_THROWS_AS(run_study(bad), NameError);
}

TEST_CASE("no interaction means no RBM error") {
    StudyConfig c;
    c.study = "strong_rbm_error";
    c.preset = "ou-noninteracting";
    c.N = {16};
    c.tau = {0.1, 0.05, 0.025};
    c.seeds = {1, 2};
    const auto r = run_study(c);
    for (const auto& row : r.rows) CHECK(row[1] == 0.0);
    CHECK(!r.fit);
}

TEST_CASE("batch force variance scales with 1/(p-1) and vanishes without interaction") {
    StudyConfig c;
    c.study = "batch_force_variance";
    c.M = 20000;
    c.replicates = 20000;
    c.tau = {0.1, 0.05, 0.025};
    c.probe_points = {0.0, 1.0};
    const auto r2 = run_study(c);
    CHECK(r2.passed());
    c.p = 5;
    const auto r5 = run_study(c);
    CHECK(r5.passed());
    const double v2 = r2.summary["probes"][0]["variance"].get<double>();
    const double v5 = r5.summary["probes"][0]["variance"].get<double>();
    CHECK(v2 / v5 == doctest::Approx(4.0).epsilon(0.1));
    c.preset = "ou-noninteracting";
    const auto r0 = run_study(c);
    CHECK(r0.summary["probes"][0]["variance"].get<double>() == 0.0);
}

TEST_CASE("contraction study and report files") {
    StudyConfig c;
    c.study = "contraction";
    c.tau = {0.1};
    c.T = 1.0;
    c.M = 5000;
    const auto r = run_study(c);
    CHECK(r.passed());
    CHECK(r.rows.size() == 11);
    const auto dir = std::filesystem::temp_directory_path() / "rbmlab_report_test";
    write_report(r, c, dir);
    std::ifstream js(dir / "contraction.json");
    const auto j = json::parse(js);
    CHECK(j["passed"].get<bool>());
    CHECK(j["provenance"]["version"] == kVersion);
    CHECK(j["provenance"]["config_hash"].get<std::string>().size() > 0);
    CHECK(std::filesystem::exists(dir / "contraction.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("config hash depends on every field") {
    StudyConfig a;
    a.study = "contraction";
    a.tau = {0.1};
    StudyConfig b = a;
    CHECK(config_hash(a) == config_hash(b));
    b.seeds = {2};
    CHECK(config_hash(a) != config_hash(b));
}
