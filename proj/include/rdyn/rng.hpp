#pragma once

#include <cstdint>

namespace rdyn {

// Counter-based random stream. Each draw hashes (key, counter) with a
// splitmix64-style finalizer, so streams derived from (master seed, trial,
// step) are reproducible and safe to use from concurrent workers without
// shared state.
class RngStream {
public:
    RngStream() : key_(0), counter_(0) {}
    explicit RngStream(std::uint64_t key) : key_(key), counter_(0) {}

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t combine(std::uint64_t a, std::uint64_t b) {
        return mix(a ^ (mix(b) + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
    }

    // Sub-stream for (trial) or (trial, step) indices.
    RngStream substream(std::uint64_t index) const {
        return RngStream(combine(key_, index));
    }
    RngStream substream(std::uint64_t i, std::uint64_t j) const {
        return RngStream(combine(combine(key_, i), j));
    }

    std::uint64_t next_u64() { return mix(key_ ^ mix(++counter_)); }

    // Uniform in [0, 1).
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi].
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_;
};

} // namespace rdyn
