// Command line driver: partition/bad-set inspection, lower-bound solutions,
// Monte Carlo regret experiments, and the Wald crossing diagnostic.
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcb/config.hpp"
#include "pcb/io.hpp"
#include "pcb/montecarlo.hpp"
#include "pcb/wald.hpp"

namespace {

using pcb::json;

struct GlobalArgs {
    std::string config_path;
    std::string out_dir;  // empty: fall back to the config, then "out"
    std::optional<uint64_t> seed;
    std::optional<int> threads;
    bool trace = false;
};

pcb::ExperimentConfig load_with_overrides(GlobalArgs& g) {
    auto cfg = pcb::load_config(g.config_path);
    if (g.seed) cfg.seed = *g.seed;
    if (g.threads) cfg.threads = *g.threads;
    if (g.out_dir.empty()) g.out_dir = cfg.out_dir.empty() ? "out" : cfg.out_dir;
    return cfg;
}

json point_json(const pcb::ParameterPoint& p) {
    json arr = json::array();
    for (double c : p.coords) arr.push_back(c);
    return arr;
}

json classification_json(const pcb::Classification& c) {
    return {{"group", c.group},
            {"optimal_jobs", c.optimal_jobs},
            {"strict", c.strict},
            {"best_mean", c.best_mean}};
}

int run_info(GlobalArgs g, bool kl_csv) {
    auto v = pcb::validate_experiment(load_with_overrides(g), false);
    pcb::ensure_directory(g.out_dir);

    json part;
    part["points"] = json::array();
    for (const auto& p : v.space.points()) part["points"].push_back(point_json(p));
    part["classification"] = json::array();
    for (const auto& c : v.part.by_point) part["classification"].push_back(classification_json(c));
    part["groups_without_strict"] = v.part.groups_without_strict;
    pcb::write_text_file(g.out_dir + "/partition.json", part.dump(2) + "\n");
    for (int gbad : v.part.groups_without_strict)
        std::cerr << "warning: group " << gbad
                  << " has no strictly optimal parameter in the supplied space\n";

    json bad = json::array();
    for (size_t q = 0; q < v.space.size(); ++q) {
        const auto rep = pcb::bad_set(*v.model, v.space, q, v.part, v.config.kl_zero_tol);
        bad.push_back({{"theta_index", q},
                       {"group", rep.group},
                       {"members", rep.members},
                       {"tolerance", rep.tolerance}});
    }
    pcb::write_text_file(g.out_dir + "/bad_sets.json", bad.dump(2) + "\n");

    if (kl_csv) {
        for (pcb::JobId job : v.model->groups().all_jobs()) {
            pcb::CsvWriter csv(g.out_dir + "/kl_job_" + job.str() + ".csv");
            std::vector<std::string> header{"theta\\theta_prime"};
            for (size_t q = 0; q < v.space.size(); ++q) header.push_back(std::to_string(q));
            csv.row(header);
            for (size_t a = 0; a < v.space.size(); ++a) {
                std::vector<std::string> row{std::to_string(a)};
                for (size_t b = 0; b < v.space.size(); ++b)
                    row.push_back(pcb::fmt_double(
                        pcb::kl_number(*v.model, job, v.space.point(a), v.space.point(b))));
                csv.row(row);
            }
        }
    }
    std::cout << "wrote " << g.out_dir << "/partition.json and " << g.out_dir
              << "/bad_sets.json (" << v.space.size() << " points)\n";
    return 0;
}

json allocation_json(const pcb::AllocationSolution& sol) {
    json jz = json::array();
    for (size_t i = 0; i < sol.vars.size(); ++i)
        jz.push_back({{"job", sol.vars[i].str()}, {"z", sol.z[i]}});
    json binding = json::array();
    for (const auto& [block, q] : sol.binding_constraints)
        binding.push_back({{"block", block == 0 ? "bad-set" : "group-" + std::to_string(block)},
                           {"theta_prime", q}});
    return {{"theta_index", sol.theta_index},
            {"group", sol.group},
            {"objective", sol.objective},
            {"z", std::move(jz)},
            {"binding_constraints", std::move(binding)}};
}

int run_bound(GlobalArgs g, std::optional<size_t> theta_only) {
    auto v = pcb::validate_experiment(load_with_overrides(g), false);
    pcb::ensure_directory(g.out_dir);
    pcb::AllocationOptions opt;
    opt.kl_zero_tol = v.config.kl_zero_tol;
    opt.feasibility_tol = v.config.feasibility_tol;
    opt.info_tol = v.config.info_tol;

    std::vector<size_t> targets;
    if (theta_only) {
        if (*theta_only >= v.space.size())
            throw pcb::ConfigError("--theta index outside the space");
        targets.push_back(*theta_only);
    } else if (!v.truth_indices.empty()) {
        targets = v.truth_indices;
    } else {
        for (size_t q = 0; q < v.space.size(); ++q) targets.push_back(q);
    }

    json out = json::array();
    for (size_t q : targets) {
        const auto sol = pcb::solve_allocation(*v.model, v.space, q, v.part, opt);
        out.push_back(allocation_json(sol));
        std::cout << "theta " << q << ": z(theta,ell) = " << pcb::fmt_double(sol.objective)
                  << "\n";
    }
    pcb::write_text_file(g.out_dir + "/allocation.json", out.dump(2) + "\n");
    return 0;
}

int run_simulate(GlobalArgs g, const std::vector<long long>& horizons_override,
                 bool with_comparison) {
    auto cfg = load_with_overrides(g);
    if (!horizons_override.empty()) cfg.horizons = horizons_override;
    auto v = pcb::validate_experiment(std::move(cfg), true);
    const auto report = pcb::monte_carlo(v, g.out_dir, g.trace);
    for (const auto& c : report.cells) {
        std::cout << "theta " << c.theta_index << " " << pcb::policy_kind_name(c.policy)
                  << " N=" << c.horizon
                  << " mean_regret=" << pcb::fmt_double(c.mean_pseudo_regret)
                  << " regret/logN=" << pcb::fmt_double(c.regret_per_log_n)
                  << " z=" << pcb::fmt_double(c.z_constant) << "\n";
    }
    if (with_comparison) {
        const auto rows = pcb::summarize_bound_vs_empirical(report);
        pcb::write_comparison_csv(rows, g.out_dir + "/comparison.csv");
        std::cout << "wrote " << g.out_dir << "/comparison.csv\n";
    }
    std::cout << "wrote " << g.out_dir << "/trials_raw.csv, aggregate.csv, report.json\n";
    return 0;
}

int run_wald(GlobalArgs g) {
    auto v = pcb::validate_experiment(load_with_overrides(g), false);
    if (!v.config.wald) throw pcb::ConfigError("config requires a \"wald\" section");
    const auto& w = *v.config.wald;
    pcb::ensure_directory(g.out_dir);

    json rows = json::array();
    pcb::CsvWriter csv(g.out_dir + "/wald.csv");
    csv.row({"threshold", "replications", "censored", "mu", "mean_s_tau", "mean_tau", "ratio",
             "ci95_half"});
    for (double c : w.thresholds) {
        const auto row = pcb::wald_diagnostic(*v.model, w.job, w.theta0, w.theta_q, c,
                                              w.replications, v.config.seed, w.step_cap);
        rows.push_back({{"threshold", row.threshold},
                        {"replications", row.replications},
                        {"censored", row.censored},
                        {"mu", row.mu},
                        {"mean_s_tau", row.mean_s_tau},
                        {"mean_tau", row.mean_tau},
                        {"ratio", row.ratio},
                        {"ci95_half", row.ci95_half}});
        csv.row({pcb::fmt_double(row.threshold), std::to_string(row.replications),
                 std::to_string(row.censored), pcb::fmt_double(row.mu),
                 pcb::fmt_double(row.mean_s_tau), pcb::fmt_double(row.mean_tau),
                 pcb::fmt_double(row.ratio), pcb::fmt_double(row.ci95_half)});
        std::cout << "c=" << pcb::fmt_double(row.threshold)
                  << " ratio=" << pcb::fmt_double(row.ratio)
                  << " ci95_half=" << pcb::fmt_double(row.ci95_half) << "\n";
    }
    pcb::write_text_file(g.out_dir + "/wald.json", rows.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Precedence-constrained bandit strategies: lower bounds, the staged "
                 "strategy, and Monte Carlo evaluation"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config_path, "experiment JSON configuration")
        ->expected(1);
    app.add_option("--out", g.out_dir, "output directory (default: out)");
    uint64_t seed_val = 0;
    auto* seed_opt = app.add_option("--seed", seed_val, "override the experiment seed");
    int threads_val = 0;
    auto* threads_opt = app.add_option("--threads", threads_val, "worker threads (0 = auto)");
    app.add_flag("--trace", g.trace, "emit per-trial JSON-lines traces");

    auto* info = app.add_subcommand("info", "partition, optimal-job sets and bad sets");
    bool kl_csv = false;
    info->add_flag("--kl-csv", kl_csv, "also write one KL matrix CSV per job");

    auto* bound = app.add_subcommand("bound", "lower-bound allocation z(theta,ell)");
    long long theta_only = -1;
    bound->add_option("--theta", theta_only, "solve only for this space index");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo regret experiment");
    auto* wald = app.add_subcommand("wald", "Wald-equation crossing diagnostic");
    auto* sweep = app.add_subcommand("sweep",
                                     "simulate over a horizon grid and compare with the bound");
    std::vector<long long> sweep_horizons;
    sweep->add_option("--horizons", sweep_horizons, "override the horizon grid")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: " << e.what() << "\n";
        std::cerr << app.help() << "\n";
        return 1;
    }

    try {
        if (g.config_path.empty()) throw pcb::ConfigError("--config is required");
        if (seed_opt->count()) g.seed = seed_val;
        if (threads_opt->count()) g.threads = threads_val;
        if (info->parsed()) return run_info(g, kl_csv);
        if (bound->parsed())
            return run_bound(g, theta_only >= 0
                                    ? std::optional<size_t>(static_cast<size_t>(theta_only))
                                    : std::nullopt);
        if (simulate->parsed()) return run_simulate(g, {}, false);
        if (sweep->parsed()) return run_simulate(g, sweep_horizons, true);
        if (wald->parsed()) return run_wald(g);
        throw pcb::ConfigError("no subcommand given");
    } catch (const pcb::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const pcb::AssumptionViolation& e) {
        // Defect of the supplied space, not of the run.
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
