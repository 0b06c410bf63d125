#pragma once

#include <cstdint>

namespace cylrev {

// Deterministic seed derivation and per-item hashing. All pipeline randomness
// flows through these so results depend only on the explicit seeds, never on
// library-internal distribution code or iteration order.

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) {
    return splitmix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

// Small counter-based generator: cheap to construct per ray/pixel/sample.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(splitmix64(seed)) {}
    Rng(uint64_t seed, uint64_t stream) : state_(splitmix64(hash_combine(seed, stream))) {}

    uint64_t next_u64() {
        state_ = splitmix64(state_);
        return state_;
    }
    // [0,1)
    double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }
    // [0, n)
    uint32_t next_below(uint32_t n) {
        return static_cast<uint32_t>(next_double() * n) % n;
    }
    bool bernoulli(double p) { return next_double() < p; }

  private:
    uint64_t state_;
};

}  // namespace cylrev
