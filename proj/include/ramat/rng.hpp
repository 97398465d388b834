#ifndef RAMAT_RNG_HPP
#define RAMAT_RNG_HPP

#include <cstdint>
#include <random>
#include <string>

namespace ramat {

// Seeded generator with platform-independent distributions. The standard
// library distributions are implementation-defined, so every variate here is
// derived directly from the raw 64-bit engine output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (no cached second variate, so the state
  /// alone determines the stream).
  double normal();

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::string save_state() const;
  void load_state(const std::string& state);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Independent seed for sub-stream `stream` of a run (splitmix64 finaliser).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace ramat

#endif  // RAMAT_RNG_HPP
