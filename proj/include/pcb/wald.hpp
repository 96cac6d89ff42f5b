#pragma once

#include <cmath>

#include "pcb/information.hpp"
#include "pcb/rng.hpp"

// Wald-equation diagnostic: the additive log-likelihood-ratio functional
// S_n crosses a threshold c at a stopping time tau; for stable chains
// E S_tau = [mu + o(1)] E tau with mu the per-observation information. The
// diagnostic simulates the crossing under the true parameter and reports
// the empirical ratio with a delta-method confidence interval.
namespace pcb {

struct WaldRow {
    double threshold = 0.0;
    int replications = 0;
    long long censored = 0;      // runs that hit the step cap
    double mu = 0.0;             // kl_number(theta0, theta_q)
    double mean_s_tau = 0.0;
    double mean_tau = 0.0;
    double ratio = 0.0;          // mean_s_tau / (mu * mean_tau)
    double ci95_half = 0.0;
};

inline WaldRow wald_diagnostic(const PopulationModel& model, JobId job,
                               const ParameterPoint& theta0, const ParameterPoint& theta_q,
                               double threshold, int replications, uint64_t seed,
                               long long step_cap = 10'000'000) {
    WaldRow row;
    row.threshold = threshold;
    row.replications = replications;
    row.mu = kl_number(model, job, theta0, theta_q);
    if (!(row.mu > 0.0))
        throw ConfigError("wald diagnostic requires positive information between the "
                          "two parameters");
    if (replications < 1) throw ConfigError("wald diagnostic requires replications >= 1");

    RandomStream root(seed);
    double sum_s = 0.0, sum_t = 0.0, sum_ss = 0.0, sum_tt = 0.0, sum_st = 0.0;
    for (int rep = 0; rep < replications; ++rep) {
        RandomStream rng = root.split(static_cast<uint64_t>(rep));
        double x = model.initial_sample(job, theta0, rng);
        double s = 0.0;
        long long n = 0;
        while (s < threshold && n < step_cap) {
            const double y = model.sample_transition(job, theta0, x, rng);
            s += model.log_transition_density(job, theta0, x, y) -
                 model.log_transition_density(job, theta_q, x, y);
            x = y;
            ++n;
        }
        if (s < threshold) ++row.censored;
        const double tn = static_cast<double>(n);
        sum_s += s;
        sum_t += tn;
        sum_ss += s * s;
        sum_tt += tn * tn;
        sum_st += s * tn;
    }
    const double n = static_cast<double>(replications);
    row.mean_s_tau = sum_s / n;
    row.mean_tau = sum_t / n;
    row.ratio = row.mean_s_tau / (row.mu * row.mean_tau);
    if (replications > 1) {
        const double var_s = std::fmax(0.0, (sum_ss - sum_s * sum_s / n) / (n - 1.0));
        const double var_t = std::fmax(0.0, (sum_tt - sum_t * sum_t / n) / (n - 1.0));
        const double cov = (sum_st - sum_s * sum_t / n) / (n - 1.0);
        // Delta method for a ratio of means.
        const double rel_var = var_s / (row.mean_s_tau * row.mean_s_tau) +
                               var_t / (row.mean_tau * row.mean_tau) -
                               2.0 * cov / (row.mean_s_tau * row.mean_tau);
        row.ci95_half = 1.96 * std::fabs(row.ratio) * std::sqrt(std::fmax(rel_var, 0.0) / n);
    }
    return row;
}

}  // namespace pcb
