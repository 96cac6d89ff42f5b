#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "pcb/models.hpp"

// Numeric integration of the information integral
//   I_ij(theta,theta') = E_{x~pi} E_{y~p(x,.)} log[p(x,y;theta)/p(x,y;theta')]
// and of density normalizations. Discrete families are summed exactly;
// Gaussian-conditional families use Gauss-Hermite; anything else gets
// composite Gauss-Legendre panels with node doubling.
namespace pcb {

struct GaussHermiteRule {
    std::vector<double> nodes;    // roots of H_n (physicists')
    std::vector<double> weights;  // sum of weights = sqrt(pi)
};

// Golub-Welsch-free construction: Newton iteration on the Hermite recurrence.
inline GaussHermiteRule gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: n must be >= 1");
    GaussHermiteRule rule;
    rule.nodes.resize(static_cast<size_t>(n));
    rule.weights.resize(static_cast<size_t>(n));
    const double sqrt_pi = std::sqrt(3.14159265358979323846264338327950288);
    const int half = (n + 1) / 2;
    double x = 0.0;
    for (int i = 0; i < half; ++i) {
        // Initial guesses (Numerical Recipes ordering: largest root first).
        if (i == 0)
            x = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        else if (i == 1)
            x -= 1.14 * std::pow(static_cast<double>(n), 0.426) / x;
        else if (i == 2)
            x = 1.86 * x - 0.86 * rule.nodes[0];
        else if (i == 3)
            x = 1.91 * x - 0.91 * rule.nodes[1];
        else
            x = 2.0 * x - rule.nodes[static_cast<size_t>(i - 2)];

        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            // Orthonormal Hermite recurrence.
            double p1 = 1.0 / std::sqrt(sqrt_pi);
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = x * std::sqrt(2.0 / (j + 1.0)) * p2 -
                     std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double dx = p1 / pp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        rule.nodes[static_cast<size_t>(i)] = x;
        rule.nodes[static_cast<size_t>(n - 1 - i)] = -x;
        const double w = 2.0 / (pp * pp);
        rule.weights[static_cast<size_t>(i)] = w;
        rule.weights[static_cast<size_t>(n - 1 - i)] = w;
    }
    if (n % 2 == 1) rule.nodes[static_cast<size_t>(half - 1)] = 0.0;
    return rule;
}

// E[f(Z)] for Z ~ N(mean, sd^2) by Gauss-Hermite.
inline double gauss_hermite_expectation(const GaussHermiteRule& rule,
                                        const std::function<double(double)>& f, double mean,
                                        double sd) {
    const double inv_sqrt_pi = 0.5641895835477562869480794515608;
    const double sqrt2 = 1.4142135623730950488016887242097;
    double acc = 0.0;
    for (size_t k = 0; k < rule.nodes.size(); ++k)
        acc += rule.weights[k] * f(mean + sqrt2 * sd * rule.nodes[k]);
    return acc * inv_sqrt_pi;
}

namespace detail {

struct GaussLegendre32 {
    double nodes[16];
    double weights[16];
    GaussLegendre32() {
        // Roots of P_32 on [-1,1], positive half; computed by Newton on the
        // Legendre recurrence at construction.
        const int n = 32;
        for (int i = 0; i < 16; ++i) {
            double x = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
            double pp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p1 = 1.0, p2 = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double p3 = p2;
                    p2 = p1;
                    p1 = ((2.0 * j + 1.0) * x * p2 - j * p3) / (j + 1.0);
                }
                pp = n * (x * p1 - p2) / (x * x - 1.0);
                const double dx = p1 / pp;
                x -= dx;
                if (std::fabs(dx) < 1e-15) break;
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
        }
    }
};

inline const GaussLegendre32& gl32() {
    static const GaussLegendre32 rule;
    return rule;
}

}  // namespace detail

// Fixed 32-point Gauss-Legendre panel on [a,b].
inline double gauss_legendre_panel_impl(const std::function<double(double)>& f, double a,
                                        double b) {
    const auto& rule = detail::gl32();
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < 16; ++i) {
        const double dx = half * rule.nodes[i];
        acc += rule.weights[i] * (f(mid + dx) + f(mid - dx));
    }
    return acc * half;
}

// Composite quadrature with panel doubling until successive refinements
// agree to rel_tol (relative to max(1,|I|)).
inline double adaptive_integral(const std::function<double(double)>& f, double a, double b,
                                double rel_tol = 1e-8, int max_doublings = 12) {
    auto composite = [&](int panels) {
        double acc = 0.0;
        const double step = (b - a) / panels;
        for (int k = 0; k < panels; ++k)
            acc += gauss_legendre_panel_impl(f, a + k * step, a + (k + 1) * step);
        return acc;
    };
    int panels = 4;
    double prev = composite(panels);
    for (int d = 0; d < max_doublings; ++d) {
        panels *= 2;
        const double cur = composite(panels);
        if (std::fabs(cur - prev) <= rel_tol * std::fmax(1.0, std::fabs(cur))) return cur;
        prev = cur;
    }
    return prev;
}

struct QuadratureOptions {
    int hermite_nodes = 64;
    double tail_halfwidth = 12.0;  // integration window in scale units (generic path)
    double rel_tol = 1e-8;
};

// log p(x,y;theta) - log p(x,y;theta'), the integrand of the KL number.
inline double log_likelihood_ratio(const PopulationModel& model, JobId job,
                                   const ParameterPoint& theta, const ParameterPoint& theta_prime,
                                   double x, double y) {
    return model.log_transition_density(job, theta, x, y) -
           model.log_transition_density(job, theta_prime, x, y);
}

// Numeric evaluation of the KL information number. Independent of any
// closed form the family may advertise.
inline double kl_quadrature(const PopulationModel& model, JobId job, const ParameterPoint& theta,
                            const ParameterPoint& theta_prime,
                            const QuadratureOptions& opt = {}) {
    model.check_job(job);
    model.check_theta(theta);
    model.check_theta(theta_prime);
    const StateDomain dom = model.domain(job);
    if (dom.discrete) {
        double acc = 0.0;
        for (double x : dom.atoms) {
            const double px = std::exp(model.log_stationary_density(job, theta, x));
            if (px <= 0.0) continue;
            double inner = 0.0;
            for (double y : dom.atoms) {
                const double pxy = std::exp(model.log_transition_density(job, theta, x, y));
                if (pxy <= 0.0) continue;
                inner += pxy * log_likelihood_ratio(model, job, theta, theta_prime, x, y);
            }
            acc += px * inner;
        }
        return acc;
    }

    auto inner_expectation = [&](double x) {
        const double c = model.transition_center(job, theta, x);
        const double s = model.transition_scale(job, theta, x);
        auto integrand_log_ratio = [&](double y) {
            return log_likelihood_ratio(model, job, theta, theta_prime, x, y);
        };
        if (model.quadrature_kind() == QuadratureKind::GaussHermite) {
            static thread_local GaussHermiteRule rule;
            static thread_local int rule_n = 0;
            if (rule_n != opt.hermite_nodes) {
                rule = gauss_hermite(opt.hermite_nodes);
                rule_n = opt.hermite_nodes;
            }
            return gauss_hermite_expectation(rule, integrand_log_ratio, c, s);
        }
        auto weighted = [&](double y) {
            return std::exp(model.log_transition_density(job, theta, x, y)) *
                   integrand_log_ratio(y);
        };
        return adaptive_integral(weighted, c - opt.tail_halfwidth * s,
                                 c + opt.tail_halfwidth * s, opt.rel_tol);
    };

    const double sc = model.stationary_center(job, theta);
    const double ss = model.stationary_scale(job, theta);
    if (model.quadrature_kind() == QuadratureKind::GaussHermite) {
        static thread_local GaussHermiteRule rule;
        static thread_local int rule_n = 0;
        if (rule_n != opt.hermite_nodes) {
            rule = gauss_hermite(opt.hermite_nodes);
            rule_n = opt.hermite_nodes;
        }
        return gauss_hermite_expectation(rule, inner_expectation, sc, ss);
    }
    auto weighted_outer = [&](double x) {
        return std::exp(model.log_stationary_density(job, theta, x)) * inner_expectation(x);
    };
    return adaptive_integral(weighted_outer, sc - opt.tail_halfwidth * ss,
                             sc + opt.tail_halfwidth * ss, opt.rel_tol);
}

// Integral (or sum) of exp(log_transition_density(x, .)) over the state
// space; should be 1 for any valid family.
inline double transition_density_mass(const PopulationModel& model, JobId job,
                                      const ParameterPoint& theta, double x,
                                      const QuadratureOptions& opt = {}) {
    const StateDomain dom = model.domain(job);
    if (dom.discrete) {
        double acc = 0.0;
        for (double y : dom.atoms)
            acc += std::exp(model.log_transition_density(job, theta, x, y));
        return acc;
    }
    const double c = model.transition_center(job, theta, x);
    const double s = model.transition_scale(job, theta, x);
    auto density = [&](double y) {
        return std::exp(model.log_transition_density(job, theta, x, y));
    };
    return adaptive_integral(density, c - opt.tail_halfwidth * s, c + opt.tail_halfwidth * s,
                             opt.rel_tol);
}

}  // namespace pcb
