#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fairsan {

// Error taxonomy, mapped to CLI exit codes:
//   UsageError       -> 1  (bad flags, bad call sequence, shape mismatches)
//   DataError        -> 2  (malformed/unsupported input data, undefined metrics)
//   DivergenceError  -> 3  (non-finite losses or gradients during training)
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b));
}

/// Sub-seed derivation: every random stream in a run is keyed by
/// (master seed, fold, alpha index, purpose tag) so any cell of the
/// cross-validation grid can be re-run in isolation.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t fold,
                                 std::uint64_t alpha_index, std::string_view purpose) {
  std::uint64_t h = splitmix64(master);
  h = mix_seed(h, fold + 1);
  h = mix_seed(h, alpha_index + 1);
  h = mix_seed(h, fnv1a(purpose));
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose) {
  return mix_seed(splitmix64(master), fnv1a(purpose));
}

/// Deterministic RNG. Doubles are produced from the raw mt19937_64 stream
/// (not std::uniform_real_distribution, whose output is implementation
/// defined), so sequences are reproducible across compilers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform index in [0, n). Rejection sampling keeps it unbiased.
  std::size_t index(std::size_t n) {
    if (n == 0) throw UsageError("Rng::index: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return static_cast<std::size_t>(x % n);
  }

  /// Fisher-Yates shuffle with this engine (std::shuffle is not portable).
  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::swap(v[i], v[index(i + 1)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Fixed-format double for CSV output; stable across runs for identical values.
std::string format_value(double v);

}  // namespace fairsan
