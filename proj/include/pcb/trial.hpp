#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pcb/strategy.hpp"

// One simulated run: each job carries its own chain whose state advances
// only when that job is processed; the policy sees nothing beyond its own
// history. Rewards are the observed states.
namespace pcb {

struct RunLength {
    JobId job;
    long long count = 0;
};

struct TrialLog {
    uint64_t seed = 0;
    long long horizon = 0;
    size_t theta_index = 0;
    std::vector<RunLength> actions;          // run-length encoded sequence
    std::vector<long long> processing_time;  // T_N per flat job index
    double total_reward = 0.0;
    double best_mean = 0.0;                  // mu*(theta)
    double pseudo_regret = 0.0;              // N mu* - sum mu_ij T_N
    double realized_regret = 0.0;            // N mu* - realized reward
    bool overshoot = false;                  // entered a group past ell(theta)
    std::vector<StageEvent> stage_events;
    std::vector<RejectionEvent> rejection_events;
    std::vector<AnomalyEvent> anomalies;
};

inline TrialLog run_trial(const PopulationModel& model, const ParameterSpace& space,
                          const PartitionReport& part, size_t theta_true, Policy& policy,
                          long long horizon, uint64_t seed) {
    if (theta_true >= space.size()) throw ConfigError("true parameter outside space");
    const ParameterPoint& theta = space.point(theta_true);
    const GroupStructure& gs = model.groups();
    const size_t u = static_cast<size_t>(gs.total_jobs());

    TrialLog log;
    log.seed = seed;
    log.horizon = horizon;
    log.theta_index = theta_true;
    log.processing_time.assign(u, 0);
    log.best_mean = part.by_point[theta_true].best_mean;

    RandomStream trial_stream(seed);
    std::vector<RandomStream> job_streams;
    std::vector<double> state(u, 0.0);
    std::vector<char> started(u, 0);
    job_streams.reserve(u);
    for (size_t f = 0; f < u; ++f) job_streams.push_back(trial_stream.split(f));

    int last_group = 1;
    for (long long t = 0; t < horizon; ++t) {
        const auto action = policy.next_action();
        if (!action)
            throw DomainError("policy terminated before the horizon was exhausted");
        const JobId job = *action;
        if (!gs.contains(job))
            throw DomainError("policy emitted unknown job " + job.str());
        if (job.group < last_group)
            throw PartialOrderViolation("policy moved back from group " +
                                        std::to_string(last_group) + " to job " + job.str());
        last_group = job.group;

        const size_t f = static_cast<size_t>(gs.flat_index(job));
        if (!started[f]) {
            state[f] = model.initial_sample(job, theta, job_streams[f]);
            started[f] = 1;
        }
        const double x_prev = state[f];
        const double x_new = model.sample_transition(job, theta, x_prev, job_streams[f]);
        state[f] = x_new;
        policy.observe(job, x_prev, x_new);

        log.total_reward += x_new;
        ++log.processing_time[f];
        if (!log.actions.empty() && log.actions.back().job == job)
            ++log.actions.back().count;
        else
            log.actions.push_back({job, 1});
    }

    double expected = 0.0;
    for (JobId job : gs.all_jobs())
        expected += model.stationary_mean(job, theta) *
                    static_cast<double>(log.processing_time[static_cast<size_t>(gs.flat_index(job))]);
    log.pseudo_regret = static_cast<double>(horizon) * log.best_mean - expected;
    log.realized_regret = static_cast<double>(horizon) * log.best_mean - log.total_reward;

    const int ell = part.by_point[theta_true].group;
    for (JobId job : gs.all_jobs())
        if (job.group > ell &&
            log.processing_time[static_cast<size_t>(gs.flat_index(job))] > 0)
            log.overshoot = true;

    if (auto* staged = dynamic_cast<StagedPolicy*>(&policy)) {
        log.stage_events = staged->stage_events();
        log.rejection_events = staged->rejection().events;
        log.anomalies = staged->anomalies();
    }
    return log;
}

}  // namespace pcb
