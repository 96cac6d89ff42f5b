#pragma once

#include <cstdint>
#include <cstddef>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>
#include <optional>

// Core domain types: jobs arranged in ordered groups, parameter points and
// finite parameter spaces. Groups are processed in increasing order and a
// strategy may never return to an earlier group; within one group jobs may
// be processed in any order.
namespace pcb {

// Thrown when a configuration (model, space, experiment) is invalid.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown on domain violations at runtime (state outside support, index out
// of range, ...).
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when the supplied finite space violates the positive-information
// assumption needed by the lower-bound program (an all-zero constraint row).
struct AssumptionViolation : std::runtime_error {
    explicit AssumptionViolation(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a policy emits an action that moves back to an earlier group.
// This is a strategy bug, not a recoverable condition.
struct PartialOrderViolation : std::logic_error {
    explicit PartialOrderViolation(const std::string& what) : std::logic_error(what) {}
};

// Job (i,j): group i in 1..I, index j in 1..J_i. Both 1-based to match the
// usual scheduling notation; the partial order is ij <= i'j' iff i <= i'.
struct JobId {
    int group = 1;
    int index = 1;

    friend bool operator==(const JobId& a, const JobId& b) {
        return a.group == b.group && a.index == b.index;
    }
    friend bool operator!=(const JobId& a, const JobId& b) { return !(a == b); }
    // Lexicographic; used for deterministic iteration, not the partial order.
    friend bool operator<(const JobId& a, const JobId& b) {
        return a.group != b.group ? a.group < b.group : a.index < b.index;
    }
    bool precedes_or_equals(const JobId& other) const { return group <= other.group; }

    std::string str() const {
        return std::to_string(group) + std::to_string(index);
    }
};

// Group sizes (J_1, ..., J_I).
class GroupStructure {
public:
    GroupStructure() = default;
    explicit GroupStructure(std::vector<int> group_sizes) : sizes_(std::move(group_sizes)) {
        if (sizes_.empty()) throw ConfigError("group structure needs at least one group");
        offsets_.reserve(sizes_.size() + 1);
        offsets_.push_back(0);
        for (int s : sizes_) {
            if (s < 1) throw ConfigError("every group must contain at least one job");
            offsets_.push_back(offsets_.back() + s);
        }
    }

    int num_groups() const { return static_cast<int>(sizes_.size()); }
    int jobs_in_group(int group) const {
        check_group(group);
        return sizes_[static_cast<size_t>(group - 1)];
    }
    int total_jobs() const { return offsets_.back(); }

    // Dense 0-based index over all jobs, group-major then job index.
    int flat_index(JobId job) const {
        check_job(job);
        return offsets_[static_cast<size_t>(job.group - 1)] + job.index - 1;
    }
    JobId job_at(int flat) const {
        if (flat < 0 || flat >= total_jobs()) throw DomainError("flat job index out of range");
        int g = 1;
        while (offsets_[static_cast<size_t>(g)] <= flat) ++g;
        return JobId{g, flat - offsets_[static_cast<size_t>(g - 1)] + 1};
    }

    std::vector<JobId> all_jobs() const {
        std::vector<JobId> out;
        out.reserve(static_cast<size_t>(total_jobs()));
        for (int i = 1; i <= num_groups(); ++i)
            for (int j = 1; j <= jobs_in_group(i); ++j) out.push_back(JobId{i, j});
        return out;
    }

    bool contains(JobId job) const {
        return job.group >= 1 && job.group <= num_groups() &&
               job.index >= 1 && job.index <= sizes_[static_cast<size_t>(job.group - 1)];
    }

    friend bool operator==(const GroupStructure& a, const GroupStructure& b) {
        return a.sizes_ == b.sizes_;
    }

private:
    void check_group(int group) const {
        if (group < 1 || group > num_groups()) throw DomainError("group index out of range");
    }
    void check_job(JobId job) const {
        if (!contains(job)) throw DomainError("job " + job.str() + " outside group structure");
    }

    std::vector<int> sizes_;
    std::vector<int> offsets_;  // prefix sums, offsets_[i] = jobs before group i+1
};

// A point in the parameter set, a vector in R^d.
struct ParameterPoint {
    std::vector<double> coords;

    size_t dim() const { return coords.size(); }
    double operator[](size_t k) const { return coords[k]; }

    double distance_to(const ParameterPoint& other) const {
        if (coords.size() != other.coords.size())
            throw DomainError("parameter dimension mismatch");
        double s = 0.0;
        for (size_t k = 0; k < coords.size(); ++k) {
            const double d = coords[k] - other.coords[k];
            s += d * d;
        }
        return std::sqrt(s);
    }

    friend bool operator==(const ParameterPoint& a, const ParameterPoint& b) {
        return a.coords == b.coords;
    }
};

enum class SpaceOrigin { NativeFinite, GridOfBox };

// Axis-aligned box used when the space is a discretized continuum.
struct Box {
    std::vector<double> lower;
    std::vector<double> upper;

    bool contains(const ParameterPoint& p, double slack = 0.0) const {
        if (p.dim() != lower.size()) return false;
        for (size_t k = 0; k < lower.size(); ++k)
            if (p[k] < lower[k] - slack || p[k] > upper[k] + slack) return false;
        return true;
    }
};

// Finite ordered list of parameter points. Order is part of the contract:
// it breaks ties deterministically everywhere downstream.
class ParameterSpace {
public:
    ParameterSpace() = default;

    static ParameterSpace from_points(std::vector<ParameterPoint> points,
                                      std::optional<double> delta = std::nullopt) {
        ParameterSpace sp;
        sp.points_ = std::move(points);
        sp.origin_ = SpaceOrigin::NativeFinite;
        sp.delta_ = delta;
        sp.validate();
        return sp;
    }

    // Uniform grid over a box, `resolution[k]` points along axis k
    // (resolution 1 pins the axis at its lower bound).
    static ParameterSpace from_box(Box box, const std::vector<int>& resolution,
                                   std::optional<double> delta = std::nullopt) {
        if (box.lower.size() != box.upper.size() || box.lower.size() != resolution.size())
            throw ConfigError("box bounds and resolution must have equal dimension");
        const size_t d = box.lower.size();
        if (d == 0) throw ConfigError("empty box");
        size_t total = 1;
        for (size_t k = 0; k < d; ++k) {
            if (resolution[k] < 1) throw ConfigError("grid resolution must be >= 1");
            if (box.lower[k] > box.upper[k]) throw ConfigError("box lower bound exceeds upper bound");
            if (resolution[k] > 1 && !(box.upper[k] > box.lower[k]))
                throw ConfigError("degenerate axis needs resolution 1");
            total *= static_cast<size_t>(resolution[k]);
            if (total > 2'000'000) throw ConfigError("grid too large");
        }
        ParameterSpace sp;
        sp.origin_ = SpaceOrigin::GridOfBox;
        sp.box_ = box;
        sp.delta_ = delta;
        sp.points_.reserve(total);
        std::vector<int> idx(d, 0);
        for (;;) {
            ParameterPoint p;
            p.coords.resize(d);
            for (size_t k = 0; k < d; ++k) {
                const int n = resolution[k];
                p.coords[k] = (n == 1) ? box.lower[k]
                                       : box.lower[k] + (static_cast<double>(idx[k]) *
                                                         (box.upper[k] - box.lower[k])) /
                                                            static_cast<double>(n - 1);
            }
            sp.points_.push_back(std::move(p));
            size_t k = d;
            while (k > 0) {
                --k;
                if (++idx[k] < resolution[k]) break;
                idx[k] = 0;
                if (k == 0) {
                    sp.validate();
                    return sp;
                }
            }
        }
    }

    size_t size() const { return points_.size(); }
    const ParameterPoint& point(size_t i) const { return points_[i]; }
    const std::vector<ParameterPoint>& points() const { return points_; }
    SpaceOrigin origin() const { return origin_; }
    const std::optional<Box>& box() const { return box_; }
    size_t dim() const { return points_.empty() ? 0 : points_.front().dim(); }

    // Adjusted-MLE neighborhood radius; when unset the strategy derives a
    // horizon-dependent default.
    std::optional<double> delta() const { return delta_; }
    void set_delta(double delta) {
        if (!(delta > 0)) throw ConfigError("neighborhood radius delta must be positive");
        delta_ = delta;
    }

    // Index of the point matching p within `tol` (Euclidean), or nullopt.
    std::optional<size_t> find(const ParameterPoint& p, double tol = 1e-9) const {
        std::optional<size_t> best;
        double best_d = tol;
        for (size_t i = 0; i < points_.size(); ++i) {
            const double d = points_[i].distance_to(p);
            if (d <= best_d) {
                best_d = d;
                best = i;
            }
        }
        return best;
    }

private:
    void validate() const {
        if (points_.empty()) throw ConfigError("parameter space must contain at least one point");
        const size_t d = points_.front().dim();
        if (d == 0) throw ConfigError("parameter points must have positive dimension");
        for (const auto& p : points_) {
            if (p.dim() != d) throw ConfigError("all parameter points must share one dimension");
            for (double c : p.coords)
                if (!std::isfinite(c)) throw ConfigError("parameter coordinates must be finite");
        }
        if (origin_ == SpaceOrigin::NativeFinite) {
            for (size_t i = 0; i < points_.size(); ++i)
                for (size_t j = i + 1; j < points_.size(); ++j)
                    if (points_[i] == points_[j])
                        throw ConfigError("parameter points must be distinct");
        }
        if (origin_ == SpaceOrigin::GridOfBox) {
            for (const auto& p : points_)
                if (!box_->contains(p, 1e-12)) throw ConfigError("grid point escapes its box");
        }
        if (delta_ && !(*delta_ > 0)) throw ConfigError("neighborhood radius delta must be positive");
    }

    std::vector<ParameterPoint> points_;
    SpaceOrigin origin_ = SpaceOrigin::NativeFinite;
    std::optional<Box> box_;
    std::optional<double> delta_;
};

}  // namespace pcb
