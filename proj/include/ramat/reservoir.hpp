#ifndef RAMAT_RESERVOIR_HPP
#define RAMAT_RESERVOIR_HPP

#include <cstdint>
#include <span>
#include <vector>

namespace ramat {

struct ReservoirConfig {
  std::size_t size = 256;
  double spectral_radius = 0.9;
  double leak_rate = 0.5;
  double input_scale = 0.1;
  double sparsity = 0.9;  ///< fraction of zero entries in the recurrent matrix
  /// Feed zeros instead of the true content of masked patches.
  bool zero_masked_input = false;

  void validate() const;
  bool operator==(const ReservoirConfig&) const = default;
};

/// Spectral radius of a dense n×n matrix by repeated squaring: the power
/// sequence W^(2^m) is renormalised after every squaring and ρ is read off
/// as ‖W^k‖^(1/k). Unlike vector power iteration this converges when the
/// dominant eigenvalues form a complex pair. Throws a numeric error if the
/// relative change is still above 1e-6 after `max_iterations` squarings.
double estimate_spectral_radius(std::span<const double> matrix, std::size_t n,
                                int max_iterations = 200);

// Fixed echo state network. Immutable once built; nothing in it is trained.
//   h' = (1 - α)·h + α·tanh(W_in·u + W·h)
class Reservoir {
 public:
  Reservoir() = default;

  static Reservoir build(const ReservoirConfig& config, std::size_t input_dim, std::uint64_t seed);

  /// Rehydrates a reservoir from stored matrices (checkpoint loading).
  Reservoir(const ReservoirConfig& config, std::size_t input_dim, std::uint64_t seed,
            std::vector<float> w_in, std::vector<float> w_res);

  const ReservoirConfig& config() const { return config_; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t size() const { return config_.size; }
  std::uint64_t seed() const { return seed_; }
  std::span<const float> w_in() const { return w_in_; }    ///< [size × input_dim]
  std::span<const float> w_res() const { return w_res_; }  ///< [size × size]

  template <typename T>
  std::vector<T> step(std::span<const T> state, std::span<const T> input) const;

  /// States after each of the P patches (flat [P × size]), starting from
  /// `initial` or from zero. Patches with `zero_input[i]` set are fed as zeros.
  template <typename T>
  std::vector<T> run(std::span<const T> patches, std::size_t num_patches,
                     std::span<const T> initial = {},
                     const std::vector<bool>* zero_input = nullptr) const;

  bool operator==(const Reservoir& other) const = default;

 private:
  ReservoirConfig config_;
  std::size_t input_dim_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<float> w_in_;
  std::vector<float> w_res_;
};

}  // namespace ramat

#endif  // RAMAT_RESERVOIR_HPP
