#pragma once

#include <atomic>
#include <chrono>
#include <mutex>
#include <cmath>
#include <functional>
#include <thread>

#include "pcb/config.hpp"
#include "pcb/io.hpp"
#include "pcb/trial.hpp"

// Monte Carlo harness: replications x horizons x policies over the true
// parameters, with per-trial derived seeds, deterministic aggregation in
// replication order, and CSV/JSON persistence.
namespace pcb {

struct RawTrialRow {
    size_t theta_index = 0;
    PolicyKind policy = PolicyKind::Staged;
    long long horizon = 0;
    int replication = 0;
    uint64_t seed = 0;
    double pseudo_regret = 0.0;
    double realized_regret = 0.0;
    double total_reward = 0.0;
    bool overshoot = false;
};

struct CellAggregate {
    size_t theta_index = 0;
    PolicyKind policy = PolicyKind::Staged;
    long long horizon = 0;
    int replications = 0;
    double mean_pseudo_regret = 0.0;
    double std_pseudo_regret = 0.0;
    double ci95_half = 0.0;
    double mean_realized_regret = 0.0;
    double mean_reward_per_step = 0.0;
    double regret_per_log_n = 0.0;
    double z_constant = 0.0;  // reference lower-bound coefficient for theta
    double ratio_to_bound = 0.0;
    double overshoot_rate = 0.0;
    double runtime_sec = 0.0;  // informational; kept out of the CSVs
};

struct RegretReport {
    std::vector<RawTrialRow> raw;
    std::vector<CellAggregate> cells;
    std::vector<double> z_by_theta;  // indexed like truth_indices
};

namespace detail {

// Fan-out over trial indices. A failing trial aborts the whole experiment:
// the first exception is captured and rethrown after the pool drains.
inline void parallel_for(int count, int threads, const std::function<void(int)>& body) {
    if (threads <= 0) {
        const unsigned hc = std::thread::hardware_concurrency();
        threads = hc ? static_cast<int>(hc) : 1;
    }
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next.store(count);
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

inline json trial_trace_json(const TrialLog& log) {
    json j;
    j["seed"] = log.seed;
    j["horizon"] = log.horizon;
    j["theta_index"] = log.theta_index;
    j["pseudo_regret"] = log.pseudo_regret;
    j["overshoot"] = log.overshoot;
    json actions = json::array();
    for (const auto& rl : log.actions)
        actions.push_back({{"job", rl.job.str()}, {"count", rl.count}});
    j["actions_rle"] = std::move(actions);
    json stages = json::array();
    for (const auto& ev : log.stage_events)
        stages.push_back({{"stage", stage_name(ev.stage)}, {"group", ev.group}, {"n", ev.at_n}});
    j["stage_events"] = std::move(stages);
    json rejections = json::array();
    for (const auto& ev : log.rejection_events) {
        json r;
        r["n"] = ev.at_n;
        if (ev.kind == RejectionEvent::Kind::Lambda) {
            r["lambda_index"] = ev.lambda_index;
            r["log_u"] = ev.log_u;
        } else {
            r["job"] = ev.job.str();
        }
        rejections.push_back(std::move(r));
    }
    j["rejections"] = std::move(rejections);
    json anomalies = json::array();
    for (const auto& an : log.anomalies)
        anomalies.push_back({{"what", an.what}, {"n", an.at_n}});
    j["anomalies"] = std::move(anomalies);
    return j;
}

}  // namespace detail

inline RegretReport monte_carlo(const ValidatedExperiment& v, const std::string& out_dir = "",
                                bool trace = false) {
    const ExperimentConfig& cfg = v.config;
    RegretReport report;
    if (!out_dir.empty()) {
        ensure_directory(out_dir);
        if (trace) ensure_directory(out_dir + "/trace");
    }

    // Reference lower-bound coefficients per true parameter.
    AllocationOptions aopt;
    aopt.kl_zero_tol = cfg.kl_zero_tol;
    aopt.feasibility_tol = cfg.feasibility_tol;
    aopt.info_tol = cfg.info_tol;
    for (size_t ti : v.truth_indices) {
        double z = std::numeric_limits<double>::quiet_NaN();
        try {
            z = solve_allocation(*v.model, v.space, ti, v.part, aopt).objective;
        } catch (const AssumptionViolation&) {
            // Reported as NaN; the simulation itself can still run.
        }
        report.z_by_theta.push_back(z);
    }

    for (size_t t = 0; t < v.truth_indices.size(); ++t) {
        const size_t theta_index = v.truth_indices[t];
        for (const auto& pc_in : cfg.policies) {
            // Experiment-level tolerance overrides flow into the strategy's
            // allocation solves.
            PolicyConfig pc = pc_in;
            pc.staged.allocation.kl_zero_tol = cfg.kl_zero_tol;
            pc.staged.allocation.feasibility_tol = cfg.feasibility_tol;
            pc.staged.allocation.info_tol = cfg.info_tol;
            for (long long horizon : cfg.horizons) {
                const auto t0 = std::chrono::steady_clock::now();
                std::vector<TrialLog> logs(static_cast<size_t>(cfg.replications));
                detail::parallel_for(cfg.replications, cfg.threads, [&](int rep) {
                    const uint64_t seed =
                        derive_seed(cfg.seed, theta_index, policy_kind_id(pc.kind),
                                    static_cast<uint64_t>(horizon), static_cast<uint64_t>(rep));
                    auto policy = make_policy(pc, *v.model, v.space, v.part, theta_index,
                                              horizon);
                    logs[static_cast<size_t>(rep)] = run_trial(
                        *v.model, v.space, v.part, theta_index, *policy, horizon, seed);
                });
                const auto t1 = std::chrono::steady_clock::now();

                CellAggregate cell;
                cell.theta_index = theta_index;
                cell.policy = pc.kind;
                cell.horizon = horizon;
                cell.replications = cfg.replications;
                cell.runtime_sec = std::chrono::duration<double>(t1 - t0).count();
                double sum = 0.0, sumsq = 0.0, sum_reward = 0.0, sum_realized = 0.0;
                int overshoots = 0;
                for (int rep = 0; rep < cfg.replications; ++rep) {
                    const TrialLog& log = logs[static_cast<size_t>(rep)];
                    sum += log.pseudo_regret;
                    sumsq += log.pseudo_regret * log.pseudo_regret;
                    sum_reward += log.total_reward;
                    sum_realized += log.realized_regret;
                    overshoots += log.overshoot ? 1 : 0;
                    report.raw.push_back({theta_index, pc.kind, horizon, rep, log.seed,
                                          log.pseudo_regret, log.realized_regret,
                                          log.total_reward, log.overshoot});
                    if (trace && !out_dir.empty()) {
                        const std::string path =
                            out_dir + "/trace/trial_t" + std::to_string(theta_index) + "_" +
                            policy_kind_name(pc.kind) + "_n" + std::to_string(horizon) +
                            "_r" + std::to_string(rep) + ".jsonl";
                        write_text_file(path, detail::trial_trace_json(log).dump() + "\n");
                    }
                }
                const double n = static_cast<double>(cfg.replications);
                cell.mean_pseudo_regret = sum / n;
                const double var =
                    cfg.replications > 1
                        ? std::fmax(0.0, (sumsq - sum * sum / n) / (n - 1.0))
                        : 0.0;
                cell.std_pseudo_regret = std::sqrt(var);
                cell.ci95_half = 1.96 * cell.std_pseudo_regret / std::sqrt(n);
                cell.mean_realized_regret = sum_realized / n;
                cell.mean_reward_per_step = sum_reward / (n * static_cast<double>(horizon));
                cell.regret_per_log_n =
                    cell.mean_pseudo_regret / std::log(static_cast<double>(horizon));
                cell.z_constant = report.z_by_theta[t];
                const double denom = cell.z_constant * std::log(static_cast<double>(horizon));
                if (denom > 0.0)
                    cell.ratio_to_bound = cell.mean_pseudo_regret / denom;
                else
                    cell.ratio_to_bound = cell.mean_pseudo_regret <= 1e-12
                                              ? 0.0
                                              : std::numeric_limits<double>::infinity();
                cell.overshoot_rate = overshoots / n;
                report.cells.push_back(cell);
            }
        }
    }

    if (!out_dir.empty()) {
        CsvWriter raw(out_dir + "/trials_raw.csv");
        raw.row({"theta_index", "policy", "N", "replication", "seed", "pseudo_regret",
                 "realized_regret", "total_reward", "overshoot"});
        for (const auto& r : report.raw)
            raw.row({std::to_string(r.theta_index), policy_kind_name(r.policy),
                     std::to_string(r.horizon), std::to_string(r.replication),
                     std::to_string(r.seed), fmt_double(r.pseudo_regret),
                     fmt_double(r.realized_regret), fmt_double(r.total_reward),
                     r.overshoot ? "1" : "0"});

        CsvWriter agg(out_dir + "/aggregate.csv");
        agg.row({"theta_index", "policy", "N", "replications", "mean_pseudo_regret",
                 "std_pseudo_regret", "ci95_half", "mean_realized_regret",
                 "mean_reward_per_step", "regret_per_log_n", "z_constant", "ratio_to_bound",
                 "overshoot_rate"});
        for (const auto& c : report.cells)
            agg.row({std::to_string(c.theta_index), policy_kind_name(c.policy),
                     std::to_string(c.horizon), std::to_string(c.replications),
                     fmt_double(c.mean_pseudo_regret), fmt_double(c.std_pseudo_regret),
                     fmt_double(c.ci95_half), fmt_double(c.mean_realized_regret),
                     fmt_double(c.mean_reward_per_step), fmt_double(c.regret_per_log_n),
                     fmt_double(c.z_constant), fmt_double(c.ratio_to_bound),
                     fmt_double(c.overshoot_rate)});

        json jr;
        jr["seed"] = cfg.seed;
        jr["replications"] = cfg.replications;
        json cells = json::array();
        for (const auto& c : report.cells) {
            cells.push_back({{"theta_index", c.theta_index},
                             {"policy", policy_kind_name(c.policy)},
                             {"N", c.horizon},
                             {"mean_pseudo_regret", c.mean_pseudo_regret},
                             {"regret_per_log_n", c.regret_per_log_n},
                             {"z_constant", c.z_constant},
                             {"ratio_to_bound", c.ratio_to_bound},
                             {"overshoot_rate", c.overshoot_rate},
                             {"runtime_sec", c.runtime_sec}});
        }
        jr["cells"] = std::move(cells);
        write_text_file(out_dir + "/report.json", jr.dump(2) + "\n");
    }
    return report;
}

// ---------------------------------------------------------------------------
// Bound-versus-empirical table: per (theta, policy) the per-horizon regret
// rates against z(theta,ell), the least-squares slope of mean regret on
// log N, and a flag for super-logarithmic growth.
struct ComparisonRow {
    size_t theta_index = 0;
    PolicyKind policy = PolicyKind::Staged;
    long long horizon = 0;
    double mean_regret = 0.0;
    double regret_per_log_n = 0.0;
    double z_constant = 0.0;
    double ratio_to_bound = 0.0;
    double slope_vs_log_n = 0.0;
    bool superlogarithmic = false;
};

inline std::vector<ComparisonRow> summarize_bound_vs_empirical(const RegretReport& report) {
    std::vector<ComparisonRow> rows;
    // Group cells by (theta, policy), preserving report order.
    std::vector<std::pair<size_t, PolicyKind>> keys;
    for (const auto& c : report.cells) {
        const std::pair<size_t, PolicyKind> k{c.theta_index, c.policy};
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    }
    for (const auto& [theta, pol] : keys) {
        std::vector<const CellAggregate*> cells;
        for (const auto& c : report.cells)
            if (c.theta_index == theta && c.policy == pol) cells.push_back(&c);
        if (cells.size() < 2)
            throw DomainError("bound comparison needs at least two horizons");
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto* c : cells) {
            const double x = std::log(static_cast<double>(c->horizon));
            sx += x;
            sy += c->mean_pseudo_regret;
            sxx += x * x;
            sxy += x * c->mean_pseudo_regret;
        }
        const double m = static_cast<double>(cells.size());
        const double slope = (m * sxy - sx * sy) / std::fmax(m * sxx - sx * sx, 1e-300);
        const double first_rate = cells.front()->regret_per_log_n;
        const double last_rate = cells.back()->regret_per_log_n;
        const bool superlog = last_rate > 1.5 * std::fmax(first_rate, 1e-12) &&
                              last_rate > 1e-9;
        for (const auto* c : cells) {
            rows.push_back({c->theta_index, c->policy, c->horizon, c->mean_pseudo_regret,
                            c->regret_per_log_n, c->z_constant, c->ratio_to_bound, slope,
                            superlog});
        }
    }
    return rows;
}

inline void write_comparison_csv(const std::vector<ComparisonRow>& rows,
                                 const std::string& path) {
    CsvWriter out(path);
    out.row({"theta_index", "policy", "N", "mean_pseudo_regret", "regret_per_log_n",
             "z_constant", "ratio_to_bound", "slope_vs_log_n", "superlogarithmic"});
    for (const auto& r : rows)
        out.row({std::to_string(r.theta_index), policy_kind_name(r.policy),
                 std::to_string(r.horizon), fmt_double(r.mean_regret),
                 fmt_double(r.regret_per_log_n), fmt_double(r.z_constant),
                 fmt_double(r.ratio_to_bound), fmt_double(r.slope_vs_log_n),
                 r.superlogarithmic ? "1" : "0"});
}

}  // namespace pcb
