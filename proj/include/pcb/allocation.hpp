#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "pcb/information.hpp"

// Lower-bound program: the minimal log N coefficient z(theta,ell) and the
// per-job experimentation levels z_ij(theta). Finite spaces expand each
// infimum constraint into one linear row per parameter point, so the whole
// problem is a small dense LP solved by a two-phase primal simplex with
// Bland's rule.
namespace pcb {

// ---------------------------------------------------------------------------
// min c.x  s.t.  A x >= b, x >= 0. Dense tableau, Bland's rule.
class SimplexSolver {
public:
    enum class Status { Optimal, Infeasible, Unbounded };

    struct Result {
        Status status = Status::Infeasible;
        double objective = 0.0;
        std::vector<double> x;
    };

    static Result solve_min(const std::vector<double>& c,
                            const std::vector<std::vector<double>>& a,
                            const std::vector<double>& b, double tol = 1e-11) {
        const size_t n = c.size();
        const size_t m = a.size();
        Result res;
        if (m == 0) {
            // Costs are nonnegative in every use here; the origin is optimal.
            res.status = Status::Optimal;
            res.x.assign(n, 0.0);
            res.objective = 0.0;
            return res;
        }

        // Columns: x (n), surplus/slack (m), artificial (m), then RHS.
        const size_t cols = n + 2 * m + 1;
        std::vector<std::vector<double>> t(m, std::vector<double>(cols, 0.0));
        std::vector<size_t> basis(m);
        std::vector<bool> artificial_used(m, false);
        for (size_t i = 0; i < m; ++i) {
            const double sign = (b[i] < 0.0) ? -1.0 : 1.0;
            for (size_t j = 0; j < n; ++j) t[i][j] = sign * a[i][j];
            t[i][n + i] = -sign;  // surplus for >=; flips to slack when row negated
            t[i][cols - 1] = sign * b[i];
            if (t[i][n + i] > 0.0) {
                basis[i] = n + i;  // slack basis, no artificial needed
            } else {
                t[i][n + m + i] = 1.0;
                basis[i] = n + m + i;
                artificial_used[i] = true;
            }
        }

        std::vector<double> obj(cols, 0.0);
        auto rebuild_objective = [&](const std::vector<double>& costs) {
            std::fill(obj.begin(), obj.end(), 0.0);
            for (size_t j = 0; j < costs.size(); ++j) obj[j] = costs[j];
            for (size_t i = 0; i < m; ++i) {
                const double cb = basis[i] < costs.size() ? costs[basis[i]] : 0.0;
                if (cb == 0.0) continue;
                for (size_t j = 0; j < cols; ++j) obj[j] -= cb * t[i][j];
            }
        };

        auto pivot = [&](size_t row, size_t col) {
            const double piv = t[row][col];
            for (size_t j = 0; j < cols; ++j) t[row][j] /= piv;
            for (size_t i = 0; i < m; ++i) {
                if (i == row || t[i][col] == 0.0) continue;
                const double f = t[i][col];
                for (size_t j = 0; j < cols; ++j) t[i][j] -= f * t[row][j];
            }
            const double f = obj[col];
            if (f != 0.0)
                for (size_t j = 0; j < cols; ++j) obj[j] -= f * t[row][j];
            basis[row] = col;
        };

        // Bland: entering = smallest-index column with negative reduced cost;
        // leaving = min ratio, ties to the smallest basis variable.
        auto iterate = [&](size_t allowed_cols) -> bool {
            for (;;) {
                size_t enter = allowed_cols;
                for (size_t j = 0; j < allowed_cols; ++j) {
                    if (obj[j] < -tol) {
                        enter = j;
                        break;
                    }
                }
                if (enter == allowed_cols) return true;  // optimal
                size_t leave = m;
                double best_ratio = std::numeric_limits<double>::infinity();
                for (size_t i = 0; i < m; ++i) {
                    if (t[i][enter] > tol) {
                        const double ratio = t[i][cols - 1] / t[i][enter];
                        if (ratio < best_ratio - 1e-15 ||
                            (ratio < best_ratio + 1e-15 &&
                             (leave == m || basis[i] < basis[leave]))) {
                            best_ratio = ratio;
                            leave = i;
                        }
                    }
                }
                if (leave == m) return false;  // unbounded direction
                pivot(leave, enter);
            }
        };

        const bool any_artificial =
            std::any_of(artificial_used.begin(), artificial_used.end(), [](bool v) { return v; });
        if (any_artificial) {
            std::vector<double> phase1(n + 2 * m, 0.0);
            for (size_t i = 0; i < m; ++i)
                if (artificial_used[i]) phase1[n + m + i] = 1.0;
            rebuild_objective(phase1);
            iterate(cols - 1);
            double infeas = 0.0;
            for (size_t i = 0; i < m; ++i)
                if (basis[i] >= n + m) infeas += t[i][cols - 1];
            if (infeas > 1e-7) {
                res.status = Status::Infeasible;
                return res;
            }
            // Drive leftover artificials out of the (degenerate) basis.
            for (size_t i = 0; i < m; ++i) {
                if (basis[i] < n + m) continue;
                size_t col = n + m;
                for (size_t j = 0; j < n + m; ++j) {
                    if (std::fabs(t[i][j]) > tol) {
                        col = j;
                        break;
                    }
                }
                if (col < n + m) pivot(i, col);
            }
        }

        // Artificials cannot re-enter (iterate scans real columns only); any
        // still basic sit at zero in redundant rows and never move.
        std::vector<double> phase2(n + 2 * m, 0.0);
        for (size_t j = 0; j < n; ++j) phase2[j] = c[j];
        rebuild_objective(phase2);
        if (!iterate(n + m)) {
            res.status = Status::Unbounded;
            return res;
        }

        res.status = Status::Optimal;
        res.x.assign(n, 0.0);
        for (size_t i = 0; i < m; ++i)
            if (basis[i] < n) res.x[basis[i]] = t[i][cols - 1];
        res.objective = 0.0;
        for (size_t j = 0; j < n; ++j) res.objective += c[j] * res.x[j];
        return res;
    }
};

// ---------------------------------------------------------------------------

struct AllocationOptions {
    double feasibility_tol = 1e-9;
    double kl_zero_tol = 1e-12;
    // When set, the group-k constraint blocks (k < ell) range over
    // Theta_k^* instead of Theta_k. Comparison switch; default follows the
    // displayed constraint system.
    bool restrict_rows_to_strict = false;
    bool lexicographic_refinement = true;
    InfoTolerances info_tol{};
};

// One expanded linear constraint: sum_j coeffs[j] * z[var j] >= 1.
struct ConstraintRow {
    int block = 0;              // k in 1..ell-1, or 0 for the bad-set block
    size_t theta_prime = 0;     // index of the point generating the row
    std::vector<double> coeffs; // parallel to the variable list
};

struct AllocationProblem {
    size_t theta_index = 0;
    int group = 1;                 // ell
    std::vector<JobId> vars;       // j=1..J_i for i<ell, then j not in J(theta) at ell
    std::vector<double> gaps;      // objective coefficients mu* - mu_ij
    std::vector<ConstraintRow> rows;
    std::vector<size_t> bad_set_members;
};

struct ConstraintViolation {
    int block = 0;
    size_t theta_prime = 0;
    double slack = 0.0;  // 1 - row.z, positive when violated
};

struct AllocationSolution {
    size_t theta_index = 0;
    int group = 1;
    std::vector<JobId> vars;
    std::vector<double> z;
    double objective = 0.0;
    std::vector<std::pair<int, size_t>> binding_constraints;  // (block, theta')
};

namespace detail {

inline std::vector<double> expanded_row(const PopulationModel& model,
                                        const ParameterSpace& space,
                                        const std::vector<JobId>& vars,
                                        const ParameterPoint& theta, size_t theta_prime,
                                        int max_group) {
    std::vector<double> coeffs(vars.size(), 0.0);
    for (size_t v = 0; v < vars.size(); ++v) {
        if (vars[v].group > max_group) continue;
        coeffs[v] = kl_number(model, vars[v], theta, space.point(theta_prime));
    }
    return coeffs;
}

}  // namespace detail

// Expand the minimization problem at space point `theta_index` into an
// explicit variable list and constraint rows. Bad set defaults to the
// point's own bad set; callers may substitute a union over an estimate
// neighborhood via `bad_override`.
inline AllocationProblem build_allocation_problem(
    const PopulationModel& model, const ParameterSpace& space, size_t theta_index,
    const PartitionReport& part, const AllocationOptions& opt = {},
    const std::vector<size_t>* bad_override = nullptr) {
    if (theta_index >= space.size()) throw DomainError("theta index outside space");
    const Classification& cls = part.by_point[theta_index];
    const ParameterPoint& theta = space.point(theta_index);
    AllocationProblem prob;
    prob.theta_index = theta_index;
    prob.group = cls.group;

    const GroupStructure& gs = model.groups();
    for (int i = 1; i < cls.group; ++i)
        for (int j = 1; j <= gs.jobs_in_group(i); ++j) prob.vars.push_back(JobId{i, j});
    for (int j = 1; j <= gs.jobs_in_group(cls.group); ++j)
        if (!std::binary_search(cls.optimal_jobs.begin(), cls.optimal_jobs.end(), j))
            prob.vars.push_back(JobId{cls.group, j});

    prob.gaps.reserve(prob.vars.size());
    for (JobId v : prob.vars)
        prob.gaps.push_back(cls.best_mean - model.stationary_mean(v, theta));

    for (int k = 1; k < cls.group; ++k) {
        for (size_t q = 0; q < space.size(); ++q) {
            const Classification& cq = part.by_point[q];
            if (cq.group != k) continue;
            if (opt.restrict_rows_to_strict && !cq.strict) continue;
            ConstraintRow row;
            row.block = k;
            row.theta_prime = q;
            row.coeffs = detail::expanded_row(model, space, prob.vars, theta, q, k);
            prob.rows.push_back(std::move(row));
        }
    }

    if (bad_override) {
        prob.bad_set_members = *bad_override;
    } else {
        prob.bad_set_members =
            bad_set(model, space, theta_index, part, opt.kl_zero_tol).members;
    }
    for (size_t q : prob.bad_set_members) {
        ConstraintRow row;
        row.block = 0;
        row.theta_prime = q;
        row.coeffs = detail::expanded_row(model, space, prob.vars, theta, q, cls.group);
        prob.rows.push_back(std::move(row));
    }

    for (const auto& row : prob.rows) {
        const bool all_zero = std::all_of(row.coeffs.begin(), row.coeffs.end(),
                                          [&](double v) { return v <= opt.kl_zero_tol; });
        if (all_zero)
            throw AssumptionViolation(
                "constraint row for parameter point " + std::to_string(row.theta_prime) +
                " has no positive information; the supplied space violates the "
                "positive-information assumption");
    }
    return prob;
}

// Violated constraints of an explicit z (parallel to prob.vars).
inline std::vector<ConstraintViolation> feasibility_check(const AllocationProblem& prob,
                                                          const std::vector<double>& z,
                                                          double tol = 1e-9) {
    if (z.size() != prob.vars.size())
        throw DomainError("z must match the problem's variable list");
    std::vector<ConstraintViolation> out;
    for (const auto& row : prob.rows) {
        double lhs = 0.0;
        for (size_t v = 0; v < z.size(); ++v) lhs += row.coeffs[v] * z[v];
        if (lhs < 1.0 - tol) out.push_back({row.block, row.theta_prime, 1.0 - lhs});
    }
    return out;
}

namespace detail {

inline AllocationSolution finish_solution(const AllocationProblem& prob,
                                          std::vector<double> z, double objective,
                                          double feas_tol) {
    AllocationSolution sol;
    sol.theta_index = prob.theta_index;
    sol.group = prob.group;
    sol.vars = prob.vars;
    for (double& v : z)
        if (v < 0.0 && v > -feas_tol) v = 0.0;
    sol.z = std::move(z);
    sol.objective = objective;
    for (const auto& row : prob.rows) {
        double lhs = 0.0;
        for (size_t v = 0; v < sol.z.size(); ++v) lhs += row.coeffs[v] * sol.z[v];
        if (std::fabs(lhs - 1.0) <= 1e-7) sol.binding_constraints.push_back({row.block, row.theta_prime});
    }
    return sol;
}

}  // namespace detail

// Solve the expanded problem. With no constraints the optimum is z == 0.
inline AllocationSolution solve_allocation_problem(const AllocationProblem& prob,
                                                   const AllocationOptions& opt = {}) {
    const size_t n = prob.vars.size();
    if (prob.rows.empty())
        return detail::finish_solution(prob, std::vector<double>(n, 0.0), 0.0,
                                       opt.feasibility_tol);

    std::vector<std::vector<double>> a;
    std::vector<double> b;
    a.reserve(prob.rows.size());
    for (const auto& row : prob.rows) {
        a.push_back(row.coeffs);
        b.push_back(1.0);
    }
    auto res = SimplexSolver::solve_min(prob.gaps, a, b);
    if (res.status == SimplexSolver::Status::Infeasible)
        throw AssumptionViolation("lower-bound program infeasible for the supplied space");
    if (res.status == SimplexSolver::Status::Unbounded)
        throw AssumptionViolation("lower-bound program unbounded; invalid objective gaps");

    if (opt.lexicographic_refinement && n > 1) {
        // Among optimal vertices, pick the lexicographically smallest z by
        // variable (job) order: fix coordinates one at a time.
        const double slack = std::fmax(1e-12, 1e-12 * std::fabs(res.objective));
        std::vector<std::vector<double>> a2 = a;
        std::vector<double> b2 = b;
        {
            std::vector<double> neg_cost(n);
            for (size_t j = 0; j < n; ++j) neg_cost[j] = -prob.gaps[j];
            a2.push_back(std::move(neg_cost));
            b2.push_back(-(res.objective + slack));
        }
        std::vector<double> fixed(n, 0.0);
        for (size_t k = 0; k < n; ++k) {
            std::vector<double> ck(n, 0.0);
            ck[k] = 1.0;
            auto step = SimplexSolver::solve_min(ck, a2, b2);
            if (step.status != SimplexSolver::Status::Optimal) break;  // keep base solution
            fixed[k] = std::fmax(0.0, step.objective);
            std::vector<double> pin(n, 0.0);
            pin[k] = -1.0;
            a2.push_back(std::move(pin));
            b2.push_back(-(fixed[k] + slack));
            if (k + 1 == n) {
                double obj = 0.0;
                for (size_t j = 0; j < n; ++j) obj += prob.gaps[j] * fixed[j];
                res.x = fixed;
                res.objective = obj;
            }
        }
    }
    return detail::finish_solution(prob, std::move(res.x), res.objective, opt.feasibility_tol);
}

inline AllocationSolution solve_allocation(const PopulationModel& model,
                                           const ParameterSpace& space, size_t theta_index,
                                           const PartitionReport& part,
                                           const AllocationOptions& opt = {},
                                           const std::vector<size_t>* bad_override = nullptr) {
    const auto prob = build_allocation_problem(model, space, theta_index, part, opt, bad_override);
    return solve_allocation_problem(prob, opt);
}

inline AllocationSolution solve_allocation(const PopulationModel& model,
                                           const ParameterSpace& space, size_t theta_index,
                                           const AllocationOptions& opt = {}) {
    return solve_allocation(model, space, theta_index,
                            partition(model, space, opt.info_tol), opt);
}

// Single-point relaxation: one constraint row per group k (a fixed
// lambda_k in Theta_k^* for k < ell) plus one bad-set row at lambda_ell in
// B_ell(theta). Always a lower bound for the full optimum.
inline AllocationSolution solve_relaxation(const PopulationModel& model,
                                           const ParameterSpace& space, size_t theta_index,
                                           const std::vector<size_t>& lambda,
                                           const PartitionReport& part,
                                           const AllocationOptions& opt = {}) {
    const Classification& cls = part.by_point[theta_index];
    if (lambda.size() != static_cast<size_t>(cls.group))
        throw DomainError("relaxation needs one lambda per group 1..ell");
    AllocationProblem prob =
        build_allocation_problem(model, space, theta_index, part, opt);

    for (int k = 1; k < cls.group; ++k) {
        const Classification& ck = part.by_point[lambda[static_cast<size_t>(k - 1)]];
        if (ck.group != k || !ck.strict)
            throw DomainError("lambda_" + std::to_string(k) +
                              " must lie in the strict region of group " + std::to_string(k));
    }
    const size_t bad_lambda = lambda.back();
    if (std::find(prob.bad_set_members.begin(), prob.bad_set_members.end(), bad_lambda) ==
        prob.bad_set_members.end())
        throw DomainError("lambda_ell must belong to the bad set of theta");

    std::vector<ConstraintRow> rows;
    const ParameterPoint& theta = space.point(theta_index);
    for (int k = 1; k < cls.group; ++k) {
        ConstraintRow row;
        row.block = k;
        row.theta_prime = lambda[static_cast<size_t>(k - 1)];
        row.coeffs =
            detail::expanded_row(model, space, prob.vars, theta, row.theta_prime, k);
        rows.push_back(std::move(row));
    }
    ConstraintRow bad_row;
    bad_row.block = 0;
    bad_row.theta_prime = bad_lambda;
    bad_row.coeffs =
        detail::expanded_row(model, space, prob.vars, theta, bad_lambda, cls.group);
    rows.push_back(std::move(bad_row));
    prob.rows = std::move(rows);
    return solve_allocation_problem(prob, opt);
}

}  // namespace pcb
