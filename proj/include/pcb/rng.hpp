#pragma once

#include <cstdint>
#include <cmath>

// Counter-based random stream. Output k is a strong 64-bit mix of
// (key, k), so streams derived from distinct keys are independent and a
// stream never depends on how sibling streams were consumed. This keeps
// trials reproducible and order-independent under parallel execution.
namespace pcb {

namespace detail {

inline uint64_t mix64(uint64_t z) {
    // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t hash_combine(uint64_t seed, uint64_t value) {
    return mix64(seed ^ (value + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

}  // namespace detail

class RandomStream {
public:
    RandomStream() : key_(0) {}
    explicit RandomStream(uint64_t key) : key_(key) {}

    // Child stream keyed by a label; independent of this stream's position.
    RandomStream split(uint64_t label) const {
        return RandomStream(detail::hash_combine(key_, label));
    }

    uint64_t next_u64() { return detail::mix64(key_ ^ detail::mix64(counter_++)); }

    // Uniform on (0,1); never returns exactly 0 or 1.
    double uniform() {
        const uint64_t bits = next_u64() >> 11;  // 53 bits
        return (static_cast<double>(bits) + 0.5) * 0x1p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via Box-Muller; one pair cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    uint64_t key() const { return key_; }

private:
    uint64_t key_;
    uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Deterministic per-trial seed derivation from experiment coordinates.
inline uint64_t derive_seed(uint64_t master, uint64_t theta_index, uint64_t policy_id,
                            uint64_t horizon, uint64_t replication) {
    uint64_t s = detail::mix64(master);
    s = detail::hash_combine(s, theta_index);
    s = detail::hash_combine(s, policy_id);
    s = detail::hash_combine(s, horizon);
    s = detail::hash_combine(s, replication);
    return s;
}

}  // namespace pcb
