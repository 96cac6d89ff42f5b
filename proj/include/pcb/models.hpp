#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pcb/core.hpp"
#include "pcb/rng.hpp"

// Reward population families. Each job (i,j) under parameter theta is a
// Markov chain on real states: an initial law nu_ij, a transition density
// p_ij(x,y;theta), and a stationary mean mu_ij(theta). The reward is the
// identity on the observed state. All densities are handled in log space.
namespace pcb {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

inline double log_normal_density(double y, double mean, double sd) {
    const double z = (y - mean) / sd;
    return -0.5 * z * z - std::log(sd) - 0.5 * kLog2Pi;
}

// How a family's state space should be integrated over.
struct StateDomain {
    bool discrete = false;
    std::vector<double> atoms;  // discrete only
};

// Hint for the numeric KL fallback: Gaussian conditionals admit exact
// Gauss-Hermite; anything else gets panel quadrature with node doubling.
enum class QuadratureKind { GaussHermite, Generic };

class PopulationModel {
public:
    virtual ~PopulationModel() = default;

    virtual std::string family_name() const = 0;
    virtual const GroupStructure& groups() const = 0;
    // Dimension d of theta this model expects.
    virtual size_t param_dim() const = 0;

    // x0 ~ nu_ij(.;theta).
    virtual double initial_sample(JobId job, const ParameterPoint& theta,
                                  RandomStream& rng) const = 0;
    // y ~ p_ij(x, .; theta).
    virtual double sample_transition(JobId job, const ParameterPoint& theta, double x,
                                     RandomStream& rng) const = 0;
    virtual double log_transition_density(JobId job, const ParameterPoint& theta, double x,
                                          double y) const = 0;
    virtual double log_initial_density(JobId job, const ParameterPoint& theta,
                                       double x) const = 0;
    virtual double stationary_mean(JobId job, const ParameterPoint& theta) const = 0;

    // Numeric-integration support surface.
    virtual StateDomain domain(JobId job) const = 0;
    virtual QuadratureKind quadrature_kind() const { return QuadratureKind::Generic; }
    // Location/scale of p_ij(x,.;theta) and of the stationary law, used to
    // place quadrature nodes. Continuous families only.
    virtual double transition_center(JobId, const ParameterPoint&, double) const { return 0.0; }
    virtual double transition_scale(JobId, const ParameterPoint&, double) const { return 1.0; }
    virtual double stationary_center(JobId job, const ParameterPoint& theta) const {
        return stationary_mean(job, theta);
    }
    virtual double stationary_scale(JobId, const ParameterPoint&) const { return 1.0; }
    virtual double log_stationary_density(JobId job, const ParameterPoint& theta,
                                          double x) const = 0;

    // Closed-form KL information number, when the family has one.
    virtual std::optional<double> kl_closed_form(JobId, const ParameterPoint&,
                                                 const ParameterPoint&) const {
        return std::nullopt;
    }

    void check_job(JobId job) const {
        if (!groups().contains(job)) throw ConfigError("unknown job " + job.str());
    }
    void check_theta(const ParameterPoint& theta) const {
        if (theta.dim() != param_dim())
            throw ConfigError("parameter dimension " + std::to_string(theta.dim()) +
                              " does not match model dimension " + std::to_string(param_dim()));
    }
};

// ---------------------------------------------------------------------------
// Bernoulli, independent draws. theta has one success probability per job,
// group-major; values are clamped into [eps, 1-eps] so every KL number stays
// finite even on grids that touch 0 or 1.
class BernoulliModel final : public PopulationModel {
public:
    BernoulliModel(GroupStructure groups, double clamp_epsilon = 1e-6)
        : groups_(std::move(groups)), eps_(clamp_epsilon) {
        if (!(eps_ > 0.0) || !(eps_ < 0.5))
            throw ConfigError("bernoulli success probability must lie strictly inside (0,1); "
                              "clamp epsilon must be in (0, 0.5)");
    }

    std::string family_name() const override { return "bernoulli"; }
    const GroupStructure& groups() const override { return groups_; }
    size_t param_dim() const override { return static_cast<size_t>(groups_.total_jobs()); }

    double success_probability(JobId job, const ParameterPoint& theta) const {
        check_job(job);
        check_theta(theta);
        const double raw = theta[static_cast<size_t>(groups_.flat_index(job))];
        return std::fmin(std::fmax(raw, eps_), 1.0 - eps_);
    }

    double initial_sample(JobId job, const ParameterPoint& theta, RandomStream& rng) const override {
        return rng.bernoulli(success_probability(job, theta)) ? 1.0 : 0.0;
    }
    double sample_transition(JobId job, const ParameterPoint& theta, double /*x*/,
                             RandomStream& rng) const override {
        return rng.bernoulli(success_probability(job, theta)) ? 1.0 : 0.0;
    }
    double log_transition_density(JobId job, const ParameterPoint& theta, double /*x*/,
                                  double y) const override {
        const double p = success_probability(job, theta);
        if (y == 1.0) return std::log(p);
        if (y == 0.0) return std::log(1.0 - p);
        throw DomainError("bernoulli state must be 0 or 1");
    }
    double log_initial_density(JobId job, const ParameterPoint& theta, double x) const override {
        return log_transition_density(job, theta, 0.0, x);
    }
    double stationary_mean(JobId job, const ParameterPoint& theta) const override {
        return success_probability(job, theta);
    }
    double log_stationary_density(JobId job, const ParameterPoint& theta, double x) const override {
        return log_transition_density(job, theta, 0.0, x);
    }

    StateDomain domain(JobId) const override { return StateDomain{true, {0.0, 1.0}}; }

    std::optional<double> kl_closed_form(JobId job, const ParameterPoint& theta,
                                         const ParameterPoint& theta_prime) const override {
        const double p = success_probability(job, theta);
        const double q = success_probability(job, theta_prime);
        return p * std::log(p / q) + (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
    }

    double clamp_epsilon() const { return eps_; }

private:
    GroupStructure groups_;
    double eps_;
};

// ---------------------------------------------------------------------------
// Phase/type reward maps shared by the Gaussian and AR(1) families:
// theta = (alpha_1..alpha_J, beta), all groups hold the same J job types,
//   mu_ij(theta)  = alpha_j * t_i^2 / (e^{t_i beta} - 1)
//   sigma_i(theta) = 1 / (e^{t_i beta} - 1)
// with phase times 0 < t_1 < ... < t_I.
struct PhaseRewardMap {
    std::vector<double> phase_times;

    void validate(const GroupStructure& groups) const {
        if (phase_times.size() != static_cast<size_t>(groups.num_groups()))
            throw ConfigError("one phase time per group required");
        double prev = 0.0;
        for (double t : phase_times) {
            if (!(t > prev)) throw ConfigError("phase times must be strictly increasing and positive");
            prev = t;
        }
        const int j0 = groups.jobs_in_group(1);
        for (int i = 2; i <= groups.num_groups(); ++i)
            if (groups.jobs_in_group(i) != j0)
                throw ConfigError("this family expects the same number of job types in every group");
    }

    double denom(int group, double beta) const {
        return std::expm1(phase_times[static_cast<size_t>(group - 1)] * beta);
    }
    double mean(JobId job, const ParameterPoint& theta) const {
        const double t = phase_times[static_cast<size_t>(job.group - 1)];
        const double alpha = theta[static_cast<size_t>(job.index - 1)];
        return alpha * t * t / denom(job.group, beta(theta));
    }
    double sd(JobId job, const ParameterPoint& theta) const {
        return 1.0 / denom(job.group, beta(theta));
    }
    double beta(const ParameterPoint& theta) const { return theta[theta.dim() - 1]; }

    void check_theta_positive(const ParameterPoint& theta) const {
        for (double c : theta.coords)
            if (!(c > 0.0))
                throw ConfigError("this family requires strictly positive parameter coordinates");
    }
};

// Gaussian rewards, independent draws: X ~ N(mu_ij(theta), sigma_i(theta)^2).
class GaussianIidModel final : public PopulationModel {
public:
    GaussianIidModel(GroupStructure groups, std::vector<double> phase_times)
        : groups_(std::move(groups)), map_{std::move(phase_times)} {
        map_.validate(groups_);
    }

    std::string family_name() const override { return "gaussian"; }
    const GroupStructure& groups() const override { return groups_; }
    size_t param_dim() const override {
        return static_cast<size_t>(groups_.jobs_in_group(1)) + 1;
    }

    double mean(JobId job, const ParameterPoint& theta) const {
        check_job(job);
        check_theta(theta);
        map_.check_theta_positive(theta);
        return map_.mean(job, theta);
    }
    double sd(JobId job, const ParameterPoint& theta) const { return map_.sd(job, theta); }

    double initial_sample(JobId job, const ParameterPoint& theta, RandomStream& rng) const override {
        return rng.normal(mean(job, theta), sd(job, theta));
    }
    double sample_transition(JobId job, const ParameterPoint& theta, double /*x*/,
                             RandomStream& rng) const override {
        return rng.normal(mean(job, theta), sd(job, theta));
    }
    double log_transition_density(JobId job, const ParameterPoint& theta, double /*x*/,
                                  double y) const override {
        return log_normal_density(y, mean(job, theta), sd(job, theta));
    }
    double log_initial_density(JobId job, const ParameterPoint& theta, double x) const override {
        return log_transition_density(job, theta, 0.0, x);
    }
    double stationary_mean(JobId job, const ParameterPoint& theta) const override {
        return mean(job, theta);
    }
    double log_stationary_density(JobId job, const ParameterPoint& theta, double x) const override {
        return log_normal_density(x, mean(job, theta), sd(job, theta));
    }

    StateDomain domain(JobId) const override { return StateDomain{false, {}}; }
    QuadratureKind quadrature_kind() const override { return QuadratureKind::GaussHermite; }
    double transition_center(JobId job, const ParameterPoint& theta, double) const override {
        return mean(job, theta);
    }
    double transition_scale(JobId job, const ParameterPoint& theta, double) const override {
        return sd(job, theta);
    }
    double stationary_scale(JobId job, const ParameterPoint& theta) const override {
        return sd(job, theta);
    }

    std::optional<double> kl_closed_form(JobId job, const ParameterPoint& theta,
                                         const ParameterPoint& theta_prime) const override {
        const double mu = mean(job, theta), s = sd(job, theta);
        const double mu2 = mean(job, theta_prime), s2 = sd(job, theta_prime);
        return std::log(s2 / s) + (s * s - s2 * s2 + (mu - mu2) * (mu - mu2)) / (2.0 * s2 * s2);
    }

private:
    GroupStructure groups_;
    PhaseRewardMap map_;
};

// One AR(1) step; exposed separately so degenerate cases (sigma = 0) can be
// exercised in tests even though configs reject them.
inline double ar1_transition_sample(double a, double eps_mean, double eps_sd, double x,
                                    RandomStream& rng) {
    return a * x + eps_mean + eps_sd * rng.normal();
}

// Markovian rewards: X_k = a_i X_{k-1} + eps, eps ~ N(mu_ij(theta),
// sigma_i(theta)^2), |a_i| < 1. The initial law is the stationary law
// N(mu_ij/(1-a_i), sigma_i^2/(1-a_i^2)), so chains start in steady state.
class Ar1Model final : public PopulationModel {
public:
    Ar1Model(GroupStructure groups, std::vector<double> phase_times,
             std::vector<double> ar_coefficients)
        : groups_(std::move(groups)), map_{std::move(phase_times)},
          ar_(std::move(ar_coefficients)) {
        map_.validate(groups_);
        if (ar_.size() != static_cast<size_t>(groups_.num_groups()))
            throw ConfigError("one AR coefficient per group required");
        for (double a : ar_)
            if (!(std::fabs(a) < 1.0)) throw ConfigError("AR coefficients must satisfy |a| < 1");
    }

    std::string family_name() const override { return "ar1"; }
    const GroupStructure& groups() const override { return groups_; }
    size_t param_dim() const override {
        return static_cast<size_t>(groups_.jobs_in_group(1)) + 1;
    }

    double ar_coefficient(int group) const { return ar_[static_cast<size_t>(group - 1)]; }
    double innovation_mean(JobId job, const ParameterPoint& theta) const {
        check_job(job);
        check_theta(theta);
        map_.check_theta_positive(theta);
        return map_.mean(job, theta);
    }
    double innovation_sd(JobId job, const ParameterPoint& theta) const {
        return map_.sd(job, theta);
    }
    double stationary_sd(JobId job, const ParameterPoint& theta) const {
        const double a = ar_coefficient(job.group);
        return innovation_sd(job, theta) / std::sqrt(1.0 - a * a);
    }

    double initial_sample(JobId job, const ParameterPoint& theta, RandomStream& rng) const override {
        return rng.normal(stationary_mean(job, theta), stationary_sd(job, theta));
    }
    double sample_transition(JobId job, const ParameterPoint& theta, double x,
                             RandomStream& rng) const override {
        return ar1_transition_sample(ar_coefficient(job.group), innovation_mean(job, theta),
                                     innovation_sd(job, theta), x, rng);
    }
    double log_transition_density(JobId job, const ParameterPoint& theta, double x,
                                  double y) const override {
        const double a = ar_coefficient(job.group);
        return log_normal_density(y, a * x + innovation_mean(job, theta),
                                  innovation_sd(job, theta));
    }
    double log_initial_density(JobId job, const ParameterPoint& theta, double x) const override {
        return log_normal_density(x, stationary_mean(job, theta), stationary_sd(job, theta));
    }
    double stationary_mean(JobId job, const ParameterPoint& theta) const override {
        return innovation_mean(job, theta) / (1.0 - ar_coefficient(job.group));
    }
    double log_stationary_density(JobId job, const ParameterPoint& theta, double x) const override {
        return log_normal_density(x, stationary_mean(job, theta), stationary_sd(job, theta));
    }

    StateDomain domain(JobId) const override { return StateDomain{false, {}}; }
    QuadratureKind quadrature_kind() const override { return QuadratureKind::GaussHermite; }
    double transition_center(JobId job, const ParameterPoint& theta, double x) const override {
        return ar_coefficient(job.group) * x + innovation_mean(job, theta);
    }
    double transition_scale(JobId job, const ParameterPoint& theta, double) const override {
        return innovation_sd(job, theta);
    }
    double stationary_scale(JobId job, const ParameterPoint& theta) const override {
        return stationary_sd(job, theta);
    }

    std::optional<double> kl_closed_form(JobId job, const ParameterPoint& theta,
                                         const ParameterPoint& theta_prime) const override {
        const double a = ar_coefficient(job.group);
        // Same a for both parameters: the coefficient is a model constant.
        const double mu = innovation_mean(job, theta), s = innovation_sd(job, theta);
        const double mu2 = innovation_mean(job, theta_prime), s2 = innovation_sd(job, theta_prime);
        return kl_between(mu, s, a, mu2, s2, a);
    }

    // Full expression allowing distinct AR coefficients, for cross-family
    // comparisons in tests and diagnostics.
    static double kl_between(double mu, double s, double a, double mu2, double s2, double a2) {
        const double ms = mu / (1.0 - a);
        const double vs = s * s / (1.0 - a * a);
        const double da = a - a2;
        return std::log(s2 / s) + (s * s - s2 * s2 + (mu - mu2) * (mu - mu2)) / (2.0 * s2 * s2) +
               (da * da * (ms * ms + vs) + 2.0 * da * (mu - mu2) * ms) / (2.0 * s2 * s2);
    }

private:
    GroupStructure groups_;
    PhaseRewardMap map_;
    std::vector<double> ar_;
};

}  // namespace pcb
