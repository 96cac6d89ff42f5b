#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
    const auto dir = fs::temp_directory_path() / ("pcb_cli_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

CliResult run_cli(const std::string& args, const fs::path& workdir) {
    const fs::path out_file = workdir / "stdout.txt";
    const fs::path err_file = workdir / "stderr.txt";
    const std::string cmd = std::string(PCB_CLI_PATH) + " " + args + " > " +
                            out_file.string() + " 2> " + err_file.string();
    const int status = std::system(cmd.c_str());
    CliResult res;
    res.exit_code = WEXITSTATUS(status);
    res.out = slurp(out_file);
    res.err = slurp(err_file);
    return res;
}

std::string config_path(const std::string& name) {
    return std::string(PCB_CONFIG_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("bound subcommand solves the two point instance", "[cli]") {
    const auto dir = fresh_dir("bound");
    const auto res = run_cli("--config " + config_path("two_point.json") + " --out " +
                                 (dir / "out").string() + " bound",
                             dir);
    CAPTURE(res.err);
    REQUIRE(res.exit_code == 0);
    const json alloc = json::parse(slurp(dir / "out" / "allocation.json"));
    REQUIRE(alloc.is_array());
    REQUIRE(alloc.size() == 1);  // the configured truth
    CHECK(alloc[0]["objective"].get<double>() == Catch::Approx(0.859684404147243).epsilon(1e-9));
    CHECK(alloc[0]["z"][0]["job"].get<std::string>() == "12");
    fs::remove_all(dir);
}

TEST_CASE("info subcommand reports empty bad sets for the symmetric space", "[cli]") {
    const auto dir = fresh_dir("info");
    const auto res = run_cli("--config " + config_path("symmetric_two_point.json") + " --out " +
                                 (dir / "out").string() + " info",
                             dir);
    REQUIRE(res.exit_code == 0);
    const json bad = json::parse(slurp(dir / "out" / "bad_sets.json"));
    REQUIRE(bad.size() == 2);
    for (const auto& entry : bad) CHECK(entry["members"].empty());
    const json part = json::parse(slurp(dir / "out" / "partition.json"));
    CHECK(part["classification"][0]["group"] == 1);
    CHECK(part["classification"][1]["group"] == 1);
    fs::remove_all(dir);
}

TEST_CASE("info emits kl matrices on request", "[cli]") {
    const auto dir = fresh_dir("klcsv");
    const auto res = run_cli("--config " + config_path("two_point.json") + " --out " +
                                 (dir / "out").string() + " info --kl-csv",
                             dir);
    REQUIRE(res.exit_code == 0);
    CHECK(fs::exists(dir / "out" / "kl_job_11.csv"));
    CHECK(fs::exists(dir / "out" / "kl_job_12.csv"));
    fs::remove_all(dir);
}

TEST_CASE("bound accepts a single theta index", "[cli]") {
    const auto dir = fresh_dir("boundtheta");
    const auto res = run_cli("--config " + config_path("two_point.json") + " --out " +
                                 (dir / "out").string() + " bound --theta 1",
                             dir);
    REQUIRE(res.exit_code == 0);
    const json alloc = json::parse(slurp(dir / "out" / "allocation.json"));
    REQUIRE(alloc.size() == 1);
    CHECK(alloc[0]["theta_index"] == 1);
    // theta_b has an empty bad set, so its optimum is zero.
    CHECK(alloc[0]["objective"].get<double>() == 0.0);

    const auto bad = run_cli("--config " + config_path("two_point.json") + " --out " +
                                 (dir / "out").string() + " bound --theta 99",
                             dir);
    CHECK(bad.exit_code == 1);
    fs::remove_all(dir);
}

TEST_CASE("bound reports an information violation as a config defect", "[cli]") {
    // theta' in group 1 carries no information through any group-1 job.
    const auto dir = fresh_dir("a2viol");
    const auto cfg = dir / "bad_space.json";
    std::ofstream(cfg) << R"({
        "model": {"family": "bernoulli", "group_sizes": [1, 1]},
        "space": {"points": [[0.3, 0.7], [0.3, 0.1]]},
        "truth": [0.3, 0.7]
    })";
    const auto res = run_cli("--config " + cfg.string() + " --out " +
                                 (dir / "out").string() + " bound",
                             dir);
    CHECK(res.exit_code == 1);
    CHECK(res.err.find("error:") != std::string::npos);
    CHECK(res.err.find("positive-information") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("info warns about groups without strict parameters", "[cli]") {
    const auto dir = fresh_dir("warn");
    const auto cfg = dir / "weak_group.json";
    std::ofstream(cfg) << R"({
        "model": {"family": "bernoulli", "group_sizes": [1, 1]},
        "space": {"points": [[0.8, 0.2], [0.9, 0.4]]}
    })";
    const auto res = run_cli("--config " + cfg.string() + " --out " +
                                 (dir / "out").string() + " info",
                             dir);
    REQUIRE(res.exit_code == 0);
    CHECK(res.err.find("warning: group 2") != std::string::npos);
    const json part = json::parse(slurp(dir / "out" / "partition.json"));
    CHECK(part["groups_without_strict"] == json::array({2}));
    fs::remove_all(dir);
}

TEST_CASE("missing config file exits with a config error", "[cli]") {
    const auto dir = fresh_dir("missing");
    const auto res = run_cli("--config /no/such/file.json bound", dir);
    CHECK(res.exit_code == 1);
    CHECK(res.err.find("error: config not found: /no/such/file.json") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("unknown subcommand prints usage and fails", "[cli]") {
    const auto dir = fresh_dir("badcmd");
    const auto res = run_cli("frobnicate", dir);
    CHECK(res.exit_code == 1);
    CHECK(res.err.find("error:") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("simulate produces deterministic outputs", "[cli]") {
    const auto dir = fresh_dir("simulate");
    const auto out1 = (dir / "run1").string();
    const auto out2 = (dir / "run2").string();
    const std::string base = "--config " + config_path("smoke.json");
    const auto r1 = run_cli(base + " --out " + out1 + " simulate", dir);
    CAPTURE(r1.err);
    REQUIRE(r1.exit_code == 0);
    const auto r2 = run_cli(base + " --out " + out2 + " --threads 1 simulate", dir);
    REQUIRE(r2.exit_code == 0);
    CHECK(slurp(fs::path(out1) / "trials_raw.csv") == slurp(fs::path(out2) / "trials_raw.csv"));
    CHECK(slurp(fs::path(out1) / "aggregate.csv") == slurp(fs::path(out2) / "aggregate.csv"));
    CHECK(fs::exists(fs::path(out1) / "report.json"));

    // A different seed changes the raw trials.
    const auto out3 = (dir / "run3").string();
    const auto r3 = run_cli(base + " --out " + out3 + " --seed 999 simulate", dir);
    REQUIRE(r3.exit_code == 0);
    CHECK(slurp(fs::path(out1) / "trials_raw.csv") != slurp(fs::path(out3) / "trials_raw.csv"));
    fs::remove_all(dir);
}

TEST_CASE("sweep writes the comparison table", "[cli]") {
    const auto dir = fresh_dir("sweep");
    const auto res = run_cli("--config " + config_path("smoke.json") + " --out " +
                                 (dir / "out").string() + " sweep --horizons 300,600",
                             dir);
    CAPTURE(res.err);
    REQUIRE(res.exit_code == 0);
    const auto table = slurp(dir / "out" / "comparison.csv");
    CHECK(table.find("slope_vs_log_n") != std::string::npos);
    CHECK(table.find("round-robin") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("trace flag writes per-trial event logs", "[cli]") {
    const auto dir = fresh_dir("trace");
    const auto res = run_cli("--config " + config_path("smoke.json") + " --out " +
                                 (dir / "out").string() + " --trace simulate",
                             dir);
    REQUIRE(res.exit_code == 0);
    const auto trace_file = dir / "out" / "trace" / "trial_t0_staged_n200_r0.jsonl";
    REQUIRE(fs::exists(trace_file));
    const json line = json::parse(slurp(trace_file));
    CHECK(line.contains("stage_events"));
    CHECK(line.contains("actions_rle"));
    fs::remove_all(dir);
}

TEST_CASE("config out_dir is honored when no flag is given", "[cli]") {
    const auto dir = fresh_dir("outdir");
    const auto target = dir / "from_config";
    json cfg = json::parse(slurp(fs::path(config_path("smoke.json"))));
    cfg["out_dir"] = target.string();
    cfg["horizons"] = {100};
    cfg["replications"] = 2;
    const auto cfg_path = dir / "cfg.json";
    std::ofstream(cfg_path) << cfg.dump();
    const auto res = run_cli("--config " + cfg_path.string() + " simulate", dir);
    REQUIRE(res.exit_code == 0);
    CHECK(fs::exists(target / "aggregate.csv"));
    fs::remove_all(dir);
}

TEST_CASE("wald subcommand writes diagnostics", "[cli]") {
    const auto dir = fresh_dir("wald");
    const auto res = run_cli("--config " + config_path("wald_bernoulli.json") + " --out " +
                                 (dir / "out").string() + " wald",
                             dir);
    CAPTURE(res.err);
    REQUIRE(res.exit_code == 0);
    const json rows = json::parse(slurp(dir / "out" / "wald.json"));
    REQUIRE(rows.size() == 1);
    const double ratio = rows[0]["ratio"].get<double>();
    CHECK(ratio > 0.9);
    CHECK(ratio < 1.1);
    CHECK(fs::exists(dir / "out" / "wald.csv"));
    fs::remove_all(dir);
}
