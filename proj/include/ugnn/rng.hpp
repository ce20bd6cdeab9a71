#pragma once

// Deterministic random numbers built on the SplitMix64 finalizer.  Every draw
// is a pure function of (seed, stream, counters), so results are identical
// across platforms and independent of evaluation order.  Output files that
// record an RNG identifier use the string returned by algorithm_id().

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ugnn::rng {

inline constexpr const char* algorithm_id() { return "splitmix64"; }

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 output function: bijective on 64-bit states.
inline std::uint64_t mix(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

// Stream tags keep subsystems on non-overlapping key chains.
enum Stream : std::uint64_t {
  kDsbmEdges = 1,
  kStateOrder = 2,
  kParamInit = 3,
  kDropout = 4,
  kSplit = 5,
  kPermutation = 6,
  kScoreNoise = 7,
  kHoldout = 8,
  kFit = 9,
  kGeneric = 10,
};

// Order-sensitive key derivation: derive(s, a, b) != derive(s, b, a).
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t a) {
  return mix(seed + kGolden * (a + 1));
}
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return derive(derive(seed, a), b);
}
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                            std::uint64_t c) {
  return derive(derive(seed, a, b), c);
}
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                            std::uint64_t c, std::uint64_t d) {
  return derive(derive(seed, a, b, c), d);
}

// Stateless uniform draw in [0, 1) keyed by an already-derived value.
inline double uniform_at(std::uint64_t key) {
  return static_cast<double>(mix(key) >> 11) * 0x1.0p-53;
}

// Sequential generator over the counter chain state, state+gamma, ...
class Generator {
 public:
  explicit Generator(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += kGolden;
    return mix(state_);
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n) via rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("rng: below(0)");
    const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
    std::uint64_t v = next();
    while (v >= limit) v = next();
    return v % n;
  }

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace ugnn::rng
