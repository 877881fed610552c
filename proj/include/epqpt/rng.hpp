#pragma once

#include <cstdint>

namespace epqpt {

inline constexpr const char* kGeneratorName = "splitmix64-counter";

// SplitMix64 finalizer.
constexpr uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Counter-based stream: output k = mix64(key + (k+1) * golden), key =
// mix64(mix64(seed) ^ stream). Any (seed, stream, k) is reproducible in
// isolation. The seed is scrambled before the XOR: with a raw XOR, small
// seeds s < n would map streams 0..n-1 onto a permutation of each other.
class CounterRng {
public:
    CounterRng(uint64_t seed, uint64_t stream) : key_(mix64(mix64(seed) ^ stream)) {}

    uint64_t next_u64() { return mix64(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }
    // [0, 1) from the top 53 bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    // Standard normal by Box-Muller; both outputs are used in order.
    double normal();
    uint64_t counter() const { return counter_; }

private:
    uint64_t key_;
    uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0;
};

}  // namespace epqpt
