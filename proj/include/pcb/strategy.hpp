#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pcb/allocation.hpp"
#include "pcb/information.hpp"

// The staged strategy: estimate the parameter from group-1 samples, force
// the experimentation levels prescribed by the lower-bound program, then run
// sequential mixture likelihood-ratio tests to reject suboptimal jobs and
// decide when to advance to the next group. Baseline policies share the
// same interface.
namespace pcb {

// ---------------------------------------------------------------------------
// Schedules: n0 estimation samples per group-1 job, n1-fold oversampling of
// presumed-optimal jobs in testing cycles. Defaults grow like (log N)^{2/3}
// and (log N)^{1/3}, so n0 -> inf, n0 = o(log N), n1 = o(n0). The floor of
// 6 on n0 keeps the estimate usable at desk-scale horizons, where the bare
// power formula lands in a regime whose misestimation rate oscillates with
// the integer sample count.
struct Schedules {
    int n0 = 1;
    int n1 = 2;
    long long horizon = 1;

    static Schedules defaults(long long horizon) {
        Schedules s;
        s.horizon = horizon;
        const double logn = std::log(std::max<long long>(horizon, 2));
        s.n0 = std::max(6, static_cast<int>(std::ceil(std::pow(logn, 2.0 / 3.0))));
        s.n1 = std::max(2, static_cast<int>(std::ceil(std::cbrt(logn))));
        return s;
    }
};

// Per-job observation history. states[0] is the initial state; transitions
// are consecutive pairs.
struct JobHistory {
    std::vector<double> states;
    long long transitions() const {
        return states.empty() ? 0 : static_cast<long long>(states.size()) - 1;
    }
};

// ---------------------------------------------------------------------------
// Maximum likelihood estimate over the finite space from a set of job
// histories: argmax of the summed transition log-likelihoods, ties broken
// to the earliest point in space order.
inline size_t mle_index(const PopulationModel& model, const ParameterSpace& space,
                        const std::vector<std::pair<JobId, const JobHistory*>>& histories) {
    if (histories.empty()) throw DomainError("mle: no histories supplied");
    for (const auto& [job, hist] : histories)
        if (hist->transitions() < 1)
            throw DomainError("mle: job " + job.str() + " has no observations");
    size_t best = 0;
    double best_ll = -HUGE_VAL;
    for (size_t q = 0; q < space.size(); ++q) {
        double ll = 0.0;
        for (const auto& [job, hist] : histories) {
            const auto& xs = hist->states;
            for (size_t t = 1; t < xs.size(); ++t)
                ll += model.log_transition_density(job, space.point(q), xs[t - 1], xs[t]);
        }
        if (ll > best_ll + 1e-12) {
            best_ll = ll;
            best = q;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Adjusted estimate: within the delta/2 ball around the MLE, move to the
// earliest group reachable, then maximize the number of optimal jobs. Also
// returns the maximizing set H used to widen the bad set.
struct AdjustedMle {
    size_t index = 0;         // theta_hat_a
    int group = 1;            // ell of the ball
    std::vector<size_t> h;    // all ball points in Theta_ell with maximal |J|
};

inline AdjustedMle adjusted_mle(const ParameterSpace& space, const PartitionReport& part,
                                size_t theta_hat, double delta) {
    if (!(delta > 0)) throw DomainError("adjusted_mle: delta must be positive");
    const ParameterPoint& center = space.point(theta_hat);
    std::vector<size_t> ball;
    for (size_t q = 0; q < space.size(); ++q)
        if (space.point(q).distance_to(center) < 0.5 * delta) ball.push_back(q);

    int ell = part.by_point[theta_hat].group;
    for (size_t q : ball) ell = std::min(ell, part.by_point[q].group);

    size_t jmax = 0;
    for (size_t q : ball)
        if (part.by_point[q].group == ell)
            jmax = std::max(jmax, part.by_point[q].optimal_jobs.size());

    AdjustedMle out;
    out.group = ell;
    for (size_t q : ball)
        if (part.by_point[q].group == ell && part.by_point[q].optimal_jobs.size() == jmax)
            out.h.push_back(q);

    out.index = out.h.front();
    double best_d = space.point(out.index).distance_to(center);
    for (size_t q : out.h) {
        const double d = space.point(q).distance_to(center);
        if (d < best_d - 1e-15) {
            best_d = d;
            out.index = q;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Mixture likelihood-ratio statistic. Tracks, per space atom, the running
// log-likelihood of every observation taken so far (initial states included);
// U(lambda) = log sum_q w_q exp(LL_q) - LL_lambda over the current prior
// support. All in log space.
class TestStatisticState {
public:
    TestStatisticState(const PopulationModel& model, const ParameterSpace& space)
        : model_(&model), space_(&space), loglik_(space.size(), 0.0),
          log_prior_(space.size(), -HUGE_VAL) {}

    // Uniform prior over the atoms of groups >= k (the F_k support).
    void set_prior_from_group(const PartitionReport& part, int k) {
        size_t count = 0;
        for (size_t q = 0; q < space_->size(); ++q)
            if (part.by_point[q].group >= k) ++count;
        const double w = count ? -std::log(static_cast<double>(count)) : -HUGE_VAL;
        for (size_t q = 0; q < space_->size(); ++q)
            log_prior_[q] = part.by_point[q].group >= k ? w : -HUGE_VAL;
        dirty_ = true;
    }

    // Explicit prior weights (need not be normalized); zero weight excludes.
    void set_prior(const std::vector<double>& weights) {
        if (weights.size() != log_prior_.size())
            throw DomainError("prior weights must match the space size");
        double total = 0.0;
        for (double w : weights) {
            if (w < 0.0) throw DomainError("prior weights must be nonnegative");
            total += w;
        }
        if (!(total > 0.0)) throw DomainError("prior must have positive mass");
        for (size_t q = 0; q < weights.size(); ++q)
            log_prior_[q] = weights[q] > 0.0 ? std::log(weights[q] / total) : -HUGE_VAL;
        dirty_ = true;
    }

    void add_initial(JobId job, double x0) {
        model_->check_job(job);
        for (size_t q = 0; q < space_->size(); ++q)
            loglik_[q] += model_->log_initial_density(job, space_->point(q), x0);
        dirty_ = true;
    }

    void add_transition(JobId job, double x, double y) {
        model_->check_job(job);
        for (size_t q = 0; q < space_->size(); ++q)
            loglik_[q] += model_->log_transition_density(job, space_->point(q), x, y);
        dirty_ = true;
    }

    // log U(n; lambda). Requires lambda inside the space.
    double log_u(size_t lambda_index) const {
        if (lambda_index >= space_->size()) throw DomainError("lambda outside space");
        return log_numerator() - loglik_[lambda_index];
    }

    double log_numerator() const {
        if (dirty_) {
            double m = -HUGE_VAL;
            for (size_t q = 0; q < loglik_.size(); ++q)
                if (log_prior_[q] != -HUGE_VAL) m = std::fmax(m, log_prior_[q] + loglik_[q]);
            if (m == -HUGE_VAL) {
                cached_numerator_ = -HUGE_VAL;
            } else {
                double acc = 0.0;
                for (size_t q = 0; q < loglik_.size(); ++q)
                    if (log_prior_[q] != -HUGE_VAL)
                        acc += std::exp(log_prior_[q] + loglik_[q] - m);
                cached_numerator_ = m + std::log(acc);
            }
            dirty_ = false;
        }
        return cached_numerator_;
    }

    double loglik(size_t q) const { return loglik_[q]; }
    const ParameterSpace& space() const { return *space_; }

private:
    const PopulationModel* model_;
    const ParameterSpace* space_;
    std::vector<double> loglik_;
    std::vector<double> log_prior_;
    mutable double cached_numerator_ = 0.0;
    mutable bool dirty_ = true;
};

// ---------------------------------------------------------------------------
// Rejection bookkeeping for one run. Parameters are rejected permanently
// once their statistic crosses the horizon (track mode); jobs fall when
// every parameter defending them has fallen. The infimum variant decides
// job rejection from the current sample alone.
enum class RejectionMode { TrackLambda, Infimum };

struct RejectionEvent {
    enum class Kind { Lambda, Job } kind;
    size_t lambda_index = 0;  // Kind::Lambda
    JobId job{};              // Kind::Job
    long long at_n = 0;       // total observations when it happened
    double log_u = 0.0;
};

struct RejectionState {
    std::vector<char> lambda_rejected;     // per atom
    std::vector<long long> lambda_rejected_at;
    std::vector<char> lambda_crossed;      // statistic ever reached the boundary
    std::vector<char> lambda_recrossed;    // dropped back below after crossing
    std::vector<char> job_rejected;        // per flat job index
    std::vector<RejectionEvent> events;

    RejectionState(size_t space_size, size_t total_jobs)
        : lambda_rejected(space_size, 0), lambda_rejected_at(space_size, -1),
          lambda_crossed(space_size, 0), lambda_recrossed(space_size, 0),
          job_rejected(total_jobs, 0) {}

    bool any_recrossing() const {
        return std::any_of(lambda_recrossed.begin(), lambda_recrossed.end(),
                           [](char c) { return c != 0; });
    }
};

// One monitoring pass for group k at threshold log N. Returns the jobs of
// group k that became rejected during this sweep.
inline std::vector<JobId> rejection_sweep(const TestStatisticState& ts,
                                          const PartitionReport& part, int k, double log_n,
                                          long long at_n, RejectionMode mode,
                                          const GroupStructure& groups, RejectionState& st) {
    const size_t npts = ts.space().size();
    // Track boundary crossings for diagnostics in both modes.
    for (size_t q = 0; q < npts; ++q) {
        if (part.by_point[q].group != k) continue;
        const double lu = ts.log_u(q);
        if (lu >= log_n) {
            st.lambda_crossed[q] = 1;
        } else if (st.lambda_crossed[q]) {
            st.lambda_recrossed[q] = 1;
        }
        if (mode == RejectionMode::TrackLambda && !st.lambda_rejected[q] && lu >= log_n) {
            st.lambda_rejected[q] = 1;
            st.lambda_rejected_at[q] = at_n;
            st.events.push_back({RejectionEvent::Kind::Lambda, q, JobId{}, at_n, lu});
        }
    }

    std::vector<JobId> newly_rejected;
    for (int j = 1; j <= groups.jobs_in_group(k); ++j) {
        const JobId job{k, j};
        const size_t flat = static_cast<size_t>(groups.flat_index(job));
        if (st.job_rejected[flat]) continue;
        bool reject = true;
        double inf_log_u = HUGE_VAL;
        bool any_defender = false;
        for (size_t q = 0; q < npts; ++q) {
            if (part.by_point[q].group != k) continue;
            const auto& oj = part.by_point[q].optimal_jobs;
            if (!std::binary_search(oj.begin(), oj.end(), j)) continue;
            any_defender = true;
            if (mode == RejectionMode::TrackLambda) {
                if (!st.lambda_rejected[q]) {
                    reject = false;
                    break;
                }
            } else {
                inf_log_u = std::fmin(inf_log_u, ts.log_u(q));
                if (inf_log_u < log_n) {
                    reject = false;
                    break;
                }
            }
        }
        // A job no parameter defends is vacuously rejected.
        if (reject) {
            st.job_rejected[flat] = 1;
            st.events.push_back({RejectionEvent::Kind::Job, 0, job, at_n,
                                 any_defender && mode == RejectionMode::Infimum ? inf_log_u
                                                                                : 0.0});
            newly_rejected.push_back(job);
        }
    }
    return newly_rejected;
}

// ---------------------------------------------------------------------------
// Policy interface. The driver alternates next_action()/observe(); policies
// see nothing but their own history.
class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string name() const = 0;
    // nullopt once the horizon is exhausted.
    virtual std::optional<JobId> next_action() = 0;
    // x_prev is the state the chain was in before this processing step (the
    // initial state on the job's first observation).
    virtual void observe(JobId job, double x_prev, double x_new) = 0;
};

enum class Stage { Estimation, Experimentation, Testing, FinalPlay, Terminal };

inline const char* stage_name(Stage s) {
    switch (s) {
        case Stage::Estimation: return "estimation";
        case Stage::Experimentation: return "experimentation";
        case Stage::Testing: return "testing";
        case Stage::FinalPlay: return "final-play";
        case Stage::Terminal: return "terminal";
    }
    return "?";
}

struct StageEvent {
    Stage stage;
    int group;
    long long at_n;
};

struct AnomalyEvent {
    std::string what;
    long long at_n;
};

struct StagedPolicyConfig {
    std::optional<int> n0;
    std::optional<int> n1;
    std::optional<double> delta;      // adjusted-MLE ball diameter
    RejectionMode mode = RejectionMode::TrackLambda;
    bool reestimate = false;          // refresh the estimate at cycle starts
    AllocationOptions allocation{};
};

// The staged strategy itself.
class StagedPolicy final : public Policy {
public:
    StagedPolicy(const PopulationModel& model, const ParameterSpace& space,
                  const PartitionReport& part, long long horizon, StagedPolicyConfig config = {})
        : model_(&model), space_(&space), part_(&part), config_(config),
          schedules_(Schedules::defaults(horizon)), ts_(model, space),
          rejection_(space.size(), static_cast<size_t>(model.groups().total_jobs())),
          histories_(static_cast<size_t>(model.groups().total_jobs())),
          counts_(static_cast<size_t>(model.groups().total_jobs()), 0) {
        if (horizon < 0) throw ConfigError("horizon must be nonnegative");
        if (config_.n0) schedules_.n0 = *config_.n0;
        if (config_.n1) schedules_.n1 = *config_.n1;
        if (schedules_.n0 < 1 || schedules_.n1 < 1)
            throw ConfigError("schedules must be positive");
        // Ball diameter for the adjusted estimate: explicit override, then
        // the space's own radius, then the shrinking default n0^{-1/4}.
        if (config_.delta)
            delta_ = *config_.delta;
        else if (space.delta())
            delta_ = *space.delta();
        else
            delta_ = std::pow(static_cast<double>(schedules_.n0), -0.25);
        log_n_ = std::log(static_cast<double>(std::max<long long>(horizon, 1)));
        stage_ = Stage::Estimation;
        group_ = 1;
        record_stage();
        // Step 1: n0 observations from each group-1 job, in job order.
        for (int j = 1; j <= model.groups().jobs_in_group(1); ++j)
            for (int t = 0; t < schedules_.n0; ++t) pending_.push_back(JobId{1, j});
    }

    std::string name() const override { return "staged"; }

    std::optional<JobId> next_action() override {
        if (emitted_ >= schedules_.horizon) {
            if (stage_ != Stage::Terminal) {
                stage_ = Stage::Terminal;
                record_stage();
            }
            return std::nullopt;
        }
        while (pending_.empty()) advance_state_machine();
        return pending_.front();
    }

    void observe(JobId job, double x_prev, double x_new) override {
        if (pending_.empty() || !(pending_.front() == job))
            throw DomainError("observe() does not match the pending action");
        pending_.pop_front();
        auto& hist = histories_[static_cast<size_t>(model_->groups().flat_index(job))];
        if (hist.states.empty()) {
            hist.states.push_back(x_prev);
            ts_.add_initial(job, x_prev);
        }
        hist.states.push_back(x_new);
        ts_.add_transition(job, x_prev, x_new);
        ++counts_[static_cast<size_t>(model_->groups().flat_index(job))];
        ++emitted_;

        if (stage_ == Stage::Testing)
            sweep_and_mark();
    }

    // --- state inspection (used by the harness and tests) ---
    Stage stage() const { return stage_; }
    int current_group() const { return group_; }
    long long emitted() const { return emitted_; }
    const Schedules& schedules() const { return schedules_; }
    double delta() const { return delta_; }
    std::optional<size_t> theta_hat() const { return theta_hat_; }
    std::optional<size_t> theta_hat_a() const { return theta_hat_a_; }
    const std::vector<size_t>& estimate_neighborhood() const { return h_; }
    const std::optional<AllocationSolution>& allocation() const { return allocation_; }
    const RejectionState& rejection() const { return rejection_; }
    const std::vector<StageEvent>& stage_events() const { return stage_events_; }
    const std::vector<AnomalyEvent>& anomalies() const { return anomalies_; }
    const std::vector<long long>& sample_counts() const { return counts_; }
    std::vector<int> unrejected_jobs() const { return unrejected_; }
    const TestStatisticState& test_statistic() const { return ts_; }

private:
    void record_stage() { stage_events_.push_back({stage_, group_, emitted_}); }

    void advance_state_machine() {
        switch (stage_) {
            case Stage::Estimation:
                finish_estimation();
                break;
            case Stage::Experimentation:
                enter_testing();
                break;
            case Stage::Testing:
                testing_cycle_boundary();
                break;
            case Stage::FinalPlay:
                refill_final_play();
                break;
            case Stage::Terminal:
                throw DomainError("terminal policy asked for actions");
        }
    }

    void finish_estimation() {
        std::vector<std::pair<JobId, const JobHistory*>> hs;
        for (int j = 1; j <= model_->groups().jobs_in_group(1); ++j) {
            const JobId job{1, j};
            hs.push_back({job, &histories_[static_cast<size_t>(model_->groups().flat_index(job))]});
        }
        theta_hat_ = mle_index(*model_, *space_, hs);
        refresh_adjusted_estimate();
        enter_experimentation();
    }

    void refresh_adjusted_estimate() {
        const auto adj = adjusted_mle(*space_, *part_, *theta_hat_, delta_);
        theta_hat_a_ = adj.index;
        h_ = adj.h;
        const auto bad = union_bad_set(*model_, *space_, h_, *part_,
                                       config_.allocation.kl_zero_tol);
        try {
            allocation_ = solve_allocation(*model_, *space_, *theta_hat_a_, *part_,
                                           config_.allocation, &bad);
        } catch (const AssumptionViolation& e) {
            allocation_.reset();
            anomalies_.push_back({std::string("allocation fallback: ") + e.what(), emitted_});
        }
    }

    // Step 2: forced experimentation quotas for the current group.
    void enter_experimentation() {
        stage_ = Stage::Experimentation;
        record_stage();
        const int ell_hat = part_->by_point[*theta_hat_a_].group;
        if (ell_hat < group_) {
            // Step 2(c): the estimate says we overshot; skip experimentation.
            enter_testing();
            return;
        }
        const auto& cls = part_->by_point[*theta_hat_a_];
        for (int j = 1; j <= model_->groups().jobs_in_group(group_); ++j) {
            if (ell_hat == group_ &&
                std::binary_search(cls.optimal_jobs.begin(), cls.optimal_jobs.end(), j))
                continue;  // step 2(b): optimal jobs are not forced
            long long quota = 0;
            if (allocation_) {
                for (size_t v = 0; v < allocation_->vars.size(); ++v) {
                    if (allocation_->vars[v] == JobId{group_, j}) {
                        quota = static_cast<long long>(
                            std::floor(allocation_->z[v] * log_n_));
                        break;
                    }
                }
            }
            for (long long t = 0; t < quota; ++t) pending_.push_back(JobId{group_, j});
        }
        if (pending_.empty()) enter_testing();
    }

    // Step 3 entry: full set of unrejected jobs; parameters nobody defends
    // fall immediately.
    void enter_testing() {
        stage_ = Stage::Testing;
        record_stage();
        ts_.set_prior_from_group(*part_, group_);
        unrejected_.clear();
        for (int j = 1; j <= model_->groups().jobs_in_group(group_); ++j) {
            bool defended = false;
            for (size_t q = 0; q < space_->size(); ++q) {
                if (part_->by_point[q].group != group_) continue;
                const auto& oj = part_->by_point[q].optimal_jobs;
                if (std::binary_search(oj.begin(), oj.end(), j)) {
                    defended = true;
                    break;
                }
            }
            const size_t flat =
                static_cast<size_t>(model_->groups().flat_index(JobId{group_, j}));
            if (!defended && !rejection_.job_rejected[flat]) {
                rejection_.job_rejected[flat] = 1;
                rejection_.events.push_back(
                    {RejectionEvent::Kind::Job, 0, JobId{group_, j}, emitted_, 0.0});
                anomalies_.push_back(
                    {"job " + JobId{group_, j}.str() + " has no defending parameter", emitted_});
            }
            if (!rejection_.job_rejected[flat]) unrejected_.push_back(j);
        }
        testing_cycle_boundary();
    }

    void sweep_and_mark() {
        rejection_sweep(ts_, *part_, group_, log_n_, emitted_, config_.mode,
                        model_->groups(), rejection_);
        // Statistic recrossings make the two rejection modes diverge; note
        // them once per parameter.
        if (recross_reported_.empty()) recross_reported_.assign(space_->size(), 0);
        for (size_t q = 0; q < space_->size(); ++q) {
            if (rejection_.lambda_recrossed[q] && !recross_reported_[q]) {
                recross_reported_[q] = 1;
                anomalies_.push_back(
                    {"statistic for parameter " + std::to_string(q) +
                         " recrossed the boundary after first reaching it",
                     emitted_});
            }
        }
    }

    // Cycle boundary: drop jobs rejected during the completed cycle, then
    // either advance the group or queue the next cycle.
    void testing_cycle_boundary() {
        std::vector<int> still;
        for (int j : unrejected_)
            if (!rejection_.job_rejected[static_cast<size_t>(
                    model_->groups().flat_index(JobId{group_, j}))])
                still.push_back(j);
        unrejected_ = std::move(still);

        if (unrejected_.empty()) {
            advance_group();
            return;
        }

        if (config_.reestimate && theta_hat_) {
            std::vector<std::pair<JobId, const JobHistory*>> hs;
            for (JobId job : model_->groups().all_jobs()) {
                const auto& h = histories_[static_cast<size_t>(model_->groups().flat_index(job))];
                if (h.transitions() > 0) hs.push_back({job, &h});
            }
            theta_hat_ = mle_index(*model_, *space_, hs);
            refresh_adjusted_estimate();
        }

        // Steps 3(a)-(c): cycle membership is frozen now; rejections landing
        // mid-cycle take effect at the next boundary.
        const int ell_hat = part_->by_point[*theta_hat_a_].group;
        const auto& cls = part_->by_point[*theta_hat_a_];
        for (int j : unrejected_) {
            int copies = 1;
            if (ell_hat == group_ &&
                std::binary_search(cls.optimal_jobs.begin(), cls.optimal_jobs.end(), j))
                copies = schedules_.n1;
            for (int t = 0; t < copies; ++t) pending_.push_back(JobId{group_, j});
        }
    }

    // Step 4: next group, or commit to the estimated best job of the last
    // group for the remaining budget.
    void advance_group() {
        if (group_ < model_->groups().num_groups()) {
            ++group_;
            enter_experimentation();
            return;
        }
        stage_ = Stage::FinalPlay;
        record_stage();
        const int last = model_->groups().num_groups();
        int best_j = 1;
        double best_mu = -HUGE_VAL;
        for (int j = 1; j <= model_->groups().jobs_in_group(last); ++j) {
            const double mu =
                model_->stationary_mean(JobId{last, j}, space_->point(*theta_hat_a_));
            if (mu > best_mu + 1e-15) {
                best_mu = mu;
                best_j = j;
            }
        }
        final_job_ = JobId{last, best_j};
        refill_final_play();
    }

    void refill_final_play() {
        for (int t = 0; t < 1024; ++t) pending_.push_back(final_job_);
    }

    const PopulationModel* model_;
    const ParameterSpace* space_;
    const PartitionReport* part_;
    StagedPolicyConfig config_;
    Schedules schedules_;
    double delta_ = 0.1;
    double log_n_ = 0.0;

    Stage stage_ = Stage::Estimation;
    int group_ = 1;
    long long emitted_ = 0;
    std::deque<JobId> pending_;
    std::vector<int> unrejected_;
    std::optional<size_t> theta_hat_;
    std::optional<size_t> theta_hat_a_;
    std::vector<size_t> h_;
    std::optional<AllocationSolution> allocation_;
    JobId final_job_{};

    TestStatisticState ts_;
    RejectionState rejection_;
    std::vector<char> recross_reported_;
    std::vector<JobHistory> histories_;
    std::vector<long long> counts_;
    std::vector<StageEvent> stage_events_;
    std::vector<AnomalyEvent> anomalies_;
};

// ---------------------------------------------------------------------------
// Baselines.

// Perfect-information benchmark: a fixed optimal job for the true parameter.
class OraclePolicy final : public Policy {
public:
    OraclePolicy(const PopulationModel& model, const ParameterSpace& space,
                 const PartitionReport& part, size_t theta_true, long long horizon)
        : horizon_(horizon) {
        if (theta_true >= space.size())
            throw ConfigError("oracle policy requires the true parameter");
        const auto& cls = part.by_point[theta_true];
        job_ = JobId{cls.group, cls.optimal_jobs.front()};
        (void)model;
    }
    std::string name() const override { return "oracle"; }
    std::optional<JobId> next_action() override {
        if (emitted_ >= horizon_) return std::nullopt;
        return job_;
    }
    void observe(JobId, double, double) override { ++emitted_; }

private:
    JobId job_{};
    long long horizon_;
    long long emitted_ = 0;
};

// Cycles through the jobs of group 1 forever; never advances.
class RoundRobinPolicy final : public Policy {
public:
    RoundRobinPolicy(const PopulationModel& model, long long horizon)
        : j1_(model.groups().jobs_in_group(1)), horizon_(horizon) {}
    std::string name() const override { return "round-robin"; }
    std::optional<JobId> next_action() override {
        if (emitted_ >= horizon_) return std::nullopt;
        return JobId{1, static_cast<int>(emitted_ % j1_) + 1};
    }
    void observe(JobId, double, double) override { ++emitted_; }

private:
    long long j1_;
    long long horizon_;
    long long emitted_ = 0;
};

// Repeated estimation blocks with no testing safeguard: after each block,
// play the job with the best estimated mean reachable under the partial
// order. Demonstrates lock-in on indistinguishable alternatives.
class GreedyMlePolicy final : public Policy {
public:
    GreedyMlePolicy(const PopulationModel& model, const ParameterSpace& space,
                    long long horizon)
        : model_(&model), space_(&space), schedules_(Schedules::defaults(horizon)),
          horizon_(horizon),
          histories_(static_cast<size_t>(model.groups().total_jobs())) {
        for (int j = 1; j <= model.groups().jobs_in_group(1); ++j)
            for (int t = 0; t < schedules_.n0; ++t) pending_.push_back(JobId{1, j});
    }
    std::string name() const override { return "greedy-mle"; }

    std::optional<JobId> next_action() override {
        if (emitted_ >= horizon_) return std::nullopt;
        while (pending_.empty()) refill_block();
        return pending_.front();
    }

    void observe(JobId job, double x_prev, double x_new) override {
        pending_.pop_front();
        auto& h = histories_[static_cast<size_t>(model_->groups().flat_index(job))];
        if (h.states.empty()) h.states.push_back(x_prev);
        h.states.push_back(x_new);
        ++emitted_;
    }

private:
    void refill_block() {
        std::vector<std::pair<JobId, const JobHistory*>> hs;
        for (JobId job : model_->groups().all_jobs()) {
            const auto& h = histories_[static_cast<size_t>(model_->groups().flat_index(job))];
            if (h.transitions() > 0) hs.push_back({job, &h});
        }
        const size_t theta_hat = mle_index(*model_, *space_, hs);
        JobId best{group_, 1};
        double best_mu = -HUGE_VAL;
        for (int i = group_; i <= model_->groups().num_groups(); ++i) {
            for (int j = 1; j <= model_->groups().jobs_in_group(i); ++j) {
                const double mu =
                    model_->stationary_mean(JobId{i, j}, space_->point(theta_hat));
                if (mu > best_mu + 1e-15) {
                    best_mu = mu;
                    best = JobId{i, j};
                }
            }
        }
        group_ = best.group;
        for (int t = 0; t < schedules_.n0; ++t) pending_.push_back(best);
    }

    const PopulationModel* model_;
    const ParameterSpace* space_;
    Schedules schedules_;
    long long horizon_;
    long long emitted_ = 0;
    int group_ = 1;
    std::deque<JobId> pending_;
    std::vector<JobHistory> histories_;
};

enum class PolicyKind { Staged, Oracle, RoundRobin, GreedyMle };

inline const char* policy_kind_name(PolicyKind k) {
    switch (k) {
        case PolicyKind::Staged: return "staged";
        case PolicyKind::Oracle: return "oracle";
        case PolicyKind::RoundRobin: return "round-robin";
        case PolicyKind::GreedyMle: return "greedy-mle";
    }
    return "?";
}

inline uint64_t policy_kind_id(PolicyKind k) { return static_cast<uint64_t>(k) + 1; }

}  // namespace pcb
