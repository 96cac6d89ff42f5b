#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "pcb/models.hpp"
#include "pcb/quadrature.hpp"

// Information-geometric layer: mean rewards, KL numbers, the partition of
// the parameter space by the group of the first optimal job, per-point
// optimal-job sets, and bad sets.
namespace pcb {

struct InfoTolerances {
    double mean_rel = 1e-9;   // relative tolerance for mean comparisons
    double kl_zero = 1e-12;   // KL below this is treated as zero
};

// KL information number I_ij(theta,theta'): closed form when the family has
// one, numeric quadrature otherwise.
inline double kl_number(const PopulationModel& model, JobId job, const ParameterPoint& theta,
                        const ParameterPoint& theta_prime) {
    if (auto v = model.kl_closed_form(job, theta, theta_prime)) return *v;
    return kl_quadrature(model, job, theta, theta_prime);
}

// Classification of one point: group of the first optimal job, the optimal
// jobs within that group, and whether every optimal job lives there.
struct Classification {
    int group = 1;                 // ell with theta in Theta_ell
    std::vector<int> optimal_jobs; // J(theta), ascending job indices in group ell
    bool strict = false;           // theta in Theta_ell^*
    double best_mean = 0.0;        // mu^*(theta)
};

inline Classification classify(const PopulationModel& model, const ParameterPoint& theta,
                               const InfoTolerances& tol = {}) {
    const GroupStructure& gs = model.groups();
    const int I = gs.num_groups();
    std::vector<double> group_max(static_cast<size_t>(I), -HUGE_VAL);
    std::vector<std::vector<double>> means(static_cast<size_t>(I));
    double best = -HUGE_VAL;
    for (int i = 1; i <= I; ++i) {
        auto& row = means[static_cast<size_t>(i - 1)];
        row.resize(static_cast<size_t>(gs.jobs_in_group(i)));
        for (int j = 1; j <= gs.jobs_in_group(i); ++j) {
            const double m = model.stationary_mean(JobId{i, j}, theta);
            row[static_cast<size_t>(j - 1)] = m;
            group_max[static_cast<size_t>(i - 1)] = std::max(group_max[static_cast<size_t>(i - 1)], m);
        }
        best = std::max(best, group_max[static_cast<size_t>(i - 1)]);
    }
    const double eps = tol.mean_rel * std::fmax(1.0, std::fabs(best));

    Classification out;
    out.best_mean = best;
    out.group = I;
    for (int i = 1; i <= I; ++i) {
        if (group_max[static_cast<size_t>(i - 1)] >= best - eps) {
            out.group = i;
            break;
        }
    }
    const auto& row = means[static_cast<size_t>(out.group - 1)];
    for (int j = 1; j <= gs.jobs_in_group(out.group); ++j)
        if (row[static_cast<size_t>(j - 1)] >= best - eps) out.optimal_jobs.push_back(j);
    out.strict = true;
    for (int i = 1; i <= I; ++i) {
        if (i == out.group) continue;
        if (group_max[static_cast<size_t>(i - 1)] >= best - eps) {
            out.strict = false;
            break;
        }
    }
    return out;
}

// classify() applied pointwise to a finite space.
struct PartitionReport {
    std::vector<Classification> by_point;      // indexed like the space
    std::vector<int> groups_without_strict;    // groups i with empty Theta_i^*
};

inline PartitionReport partition(const PopulationModel& model, const ParameterSpace& space,
                                 const InfoTolerances& tol = {}) {
    PartitionReport rep;
    rep.by_point.reserve(space.size());
    std::vector<bool> has_strict(static_cast<size_t>(model.groups().num_groups()), false);
    for (size_t i = 0; i < space.size(); ++i) {
        rep.by_point.push_back(classify(model, space.point(i), tol));
        if (rep.by_point.back().strict)
            has_strict[static_cast<size_t>(rep.by_point.back().group - 1)] = true;
    }
    for (int i = 1; i <= model.groups().num_groups(); ++i)
        if (!has_strict[static_cast<size_t>(i - 1)]) rep.groups_without_strict.push_back(i);
    return rep;
}

// Bad set of theta: parameters in the same group whose optimal-job sets are
// disjoint from J(theta) yet which are indistinguishable from theta through
// every job in J(theta).
struct BadSetReport {
    size_t theta_index = 0;
    int group = 0;                  // ell
    std::vector<size_t> members;    // indices into the space
    double tolerance = 0.0;         // KL-zero tolerance used
};

namespace detail {

inline bool disjoint_sorted(const std::vector<int>& a, const std::vector<int>& b) {
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) return false;
        if (a[i] < b[j]) ++i; else ++j;
    }
    return true;
}

}  // namespace detail

inline BadSetReport bad_set(const PopulationModel& model, const ParameterSpace& space,
                            size_t theta_index, const PartitionReport& part,
                            double kl_zero_tol = 1e-12) {
    if (theta_index >= space.size()) throw DomainError("theta index outside space");
    const Classification& c = part.by_point[theta_index];
    const ParameterPoint& theta = space.point(theta_index);
    BadSetReport rep;
    rep.theta_index = theta_index;
    rep.group = c.group;
    rep.tolerance = kl_zero_tol;
    for (size_t q = 0; q < space.size(); ++q) {
        if (q == theta_index) continue;
        const Classification& cq = part.by_point[q];
        if (cq.group != c.group) continue;
        if (!detail::disjoint_sorted(c.optimal_jobs, cq.optimal_jobs)) continue;
        bool indistinguishable = true;
        for (int j : c.optimal_jobs) {
            if (kl_number(model, JobId{c.group, j}, theta, space.point(q)) > kl_zero_tol) {
                indistinguishable = false;
                break;
            }
        }
        if (indistinguishable) rep.members.push_back(q);
    }
    // Dual positivity: every member must be detectable through its own
    // optimal jobs. Failure here indicates an inconsistent mean/KL pairing.
    for (size_t q : rep.members) {
        for (int j : part.by_point[q].optimal_jobs) {
            if (!(kl_number(model, JobId{c.group, j}, theta, space.point(q)) > kl_zero_tol))
                throw AssumptionViolation(
                    "bad-set member lacks positive information through its optimal job " +
                    JobId{c.group, j}.str());
        }
    }
    return rep;
}

inline BadSetReport bad_set(const PopulationModel& model, const ParameterSpace& space,
                            size_t theta_index, double kl_zero_tol = 1e-12,
                            const InfoTolerances& tol = {}) {
    return bad_set(model, space, theta_index, partition(model, space, tol), kl_zero_tol);
}

// Union of bad sets over a set H of points; all of H must classify into one
// group. Returns sorted unique member indices.
inline std::vector<size_t> union_bad_set(const PopulationModel& model,
                                         const ParameterSpace& space,
                                         const std::vector<size_t>& h_indices,
                                         const PartitionReport& part,
                                         double kl_zero_tol = 1e-12) {
    if (h_indices.empty()) throw DomainError("union_bad_set: H must be nonempty");
    const int group = part.by_point[h_indices.front()].group;
    std::set<size_t> acc;
    for (size_t h : h_indices) {
        if (h >= space.size()) throw DomainError("union_bad_set: index outside space");
        if (part.by_point[h].group != group)
            throw DomainError("union_bad_set: H spans multiple groups");
        const auto rep = bad_set(model, space, h, part, kl_zero_tol);
        acc.insert(rep.members.begin(), rep.members.end());
    }
    return {acc.begin(), acc.end()};
}

// ---------------------------------------------------------------------------
// Group thresholds in beta for the phase/type families. With common type
// weights, group i dominates group i+1 exactly when beta exceeds the unique
// positive root of  c_i (e^{t_{i+1} b} - 1) = c_{i+1} (e^{t_i b} - 1),
// where c_i = t_i^2 (gaussian) or t_i^2 / (1 - a_i) (ar1). Found by
// bisection to a 1e-10 bracket.
struct BetaThresholds {
    // thresholds[i] separates group i+1 from group i+2 (0-based); higher
    // beta prefers earlier groups.
    std::vector<double> thresholds;
};

inline double solve_group_crossing(double t_lo, double c_lo, double t_hi, double c_hi,
                                   double bracket_width = 1e-10) {
    auto h = [&](double b) {
        return c_lo * std::expm1(t_hi * b) - c_hi * std::expm1(t_lo * b);
    };
    // h(0)=0; h dips negative then crosses once if the later group ever wins.
    if (!(c_lo * t_hi < c_hi * t_lo))
        throw DomainError("group crossing: earlier group dominates at every beta");
    double lo = 1e-12, hi = 1.0;
    while (h(hi) < 0.0) {
        hi *= 2.0;
        if (hi > 1e6) throw DomainError("group crossing: no finite threshold");
    }
    while (hi - lo > bracket_width) {
        const double mid = 0.5 * (lo + hi);
        (h(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline BetaThresholds beta_thresholds(const std::vector<double>& phase_times,
                                      const std::vector<double>& ar_coefficients = {}) {
    BetaThresholds out;
    const size_t I = phase_times.size();
    for (size_t i = 0; i + 1 < I; ++i) {
        const double scale_i =
            ar_coefficients.empty() ? 1.0 : 1.0 / (1.0 - ar_coefficients[i]);
        const double scale_n =
            ar_coefficients.empty() ? 1.0 : 1.0 / (1.0 - ar_coefficients[i + 1]);
        const double ti = phase_times[i], tn = phase_times[i + 1];
        out.thresholds.push_back(
            solve_group_crossing(ti, ti * ti * scale_i, tn, tn * tn * scale_n));
    }
    return out;
}

// Group containing the optimal job for a given beta under the threshold
// structure: group 1 for beta >= thresholds[0], group i for
// beta in [thresholds[i-1], thresholds[i-2]).
inline int group_from_beta(const BetaThresholds& th, double beta) {
    int g = 1;
    for (double t : th.thresholds) {
        if (beta >= t) return g;
        ++g;
    }
    return g;
}

}  // namespace pcb
