#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "pcb/models.hpp"

// Shared fixtures and oracles for the unit suites. Everything here is
// independent of the library paths it is used to check.
namespace testsupport {

inline double normal_cdf(double x, double mean, double sd) {
    return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

// Kolmogorov-Smirnov distance between a sample and an analytic CDF.
template <typename Cdf>
double ks_distance(std::vector<double> sample, Cdf cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

struct MeanStd {
    double mean = 0.0;
    double sd = 0.0;
};

inline MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd out;
    if (xs.empty()) return out;
    double s = 0.0;
    for (double x : xs) s += x;
    out.mean = s / static_cast<double>(xs.size());
    double q = 0.0;
    for (double x : xs) q += (x - out.mean) * (x - out.mean);
    out.sd = xs.size() > 1 ? std::sqrt(q / static_cast<double>(xs.size() - 1)) : 0.0;
    return out;
}

// Minimal plugin family: independent Laplace(location_j(theta), scale b)
// rewards, one location coordinate per job. No closed-form KL is
// advertised, so the library must fall back to numeric quadrature; the
// exact KL |m-m'|/b + exp(-|m-m'|/b) - 1 is the test oracle.
class LaplaceIidModel final : public pcb::PopulationModel {
public:
    LaplaceIidModel(pcb::GroupStructure groups, double scale)
        : groups_(std::move(groups)), b_(scale) {}

    std::string family_name() const override { return "laplace-plugin"; }
    const pcb::GroupStructure& groups() const override { return groups_; }
    size_t param_dim() const override { return static_cast<size_t>(groups_.total_jobs()); }

    double location(pcb::JobId job, const pcb::ParameterPoint& theta) const {
        return theta[static_cast<size_t>(groups_.flat_index(job))];
    }

    double initial_sample(pcb::JobId job, const pcb::ParameterPoint& theta,
                          pcb::RandomStream& rng) const override {
        return sample_transition(job, theta, 0.0, rng);
    }
    double sample_transition(pcb::JobId job, const pcb::ParameterPoint& theta, double,
                             pcb::RandomStream& rng) const override {
        const double u = rng.uniform() - 0.5;
        return location(job, theta) - b_ * std::copysign(std::log1p(-2.0 * std::fabs(u)), u);
    }
    double log_transition_density(pcb::JobId job, const pcb::ParameterPoint& theta, double,
                                  double y) const override {
        return -std::fabs(y - location(job, theta)) / b_ - std::log(2.0 * b_);
    }
    double log_initial_density(pcb::JobId job, const pcb::ParameterPoint& theta,
                               double x) const override {
        return log_transition_density(job, theta, 0.0, x);
    }
    double stationary_mean(pcb::JobId job, const pcb::ParameterPoint& theta) const override {
        return location(job, theta);
    }
    double log_stationary_density(pcb::JobId job, const pcb::ParameterPoint& theta,
                                  double x) const override {
        return log_transition_density(job, theta, 0.0, x);
    }
    pcb::StateDomain domain(pcb::JobId) const override { return {false, {}}; }
    double transition_center(pcb::JobId job, const pcb::ParameterPoint& theta,
                             double) const override {
        return location(job, theta);
    }
    double transition_scale(pcb::JobId, const pcb::ParameterPoint&, double) const override {
        return b_;
    }
    double stationary_scale(pcb::JobId, const pcb::ParameterPoint&) const override { return b_; }

    static double exact_kl(double m1, double m2, double b) {
        const double d = std::fabs(m1 - m2) / b;
        return d + std::exp(-d) - 1.0;
    }

private:
    pcb::GroupStructure groups_;
    double b_;
};

inline pcb::ParameterPoint pt(std::initializer_list<double> coords) {
    return pcb::ParameterPoint{std::vector<double>(coords)};
}

}  // namespace testsupport
