#include "ramat/reservoir.hpp"

#include <cmath>
#include <string>

#include "ramat/error.hpp"
#include "ramat/rng.hpp"

namespace ramat {

void ReservoirConfig::validate() const {
  if (size < 1) throw config_error("reservoir size must be >= 1");
  if (!(spectral_radius > 0.0)) throw config_error("spectral_radius must be > 0");
  if (!(leak_rate > 0.0 && leak_rate <= 1.0)) throw config_error("leak_rate must be in (0, 1]");
  if (!(input_scale >= 0.0)) throw config_error("input_scale must be >= 0");
  if (!(sparsity >= 0.0 && sparsity < 1.0)) throw config_error("sparsity must be in [0, 1)");
}

double estimate_spectral_radius(std::span<const double> matrix, std::size_t n, int max_iterations) {
  if (matrix.size() != n * n) throw dimension_error("spectral radius of a non-square matrix");
  auto frobenius = [](const std::vector<double>& a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
  };
  std::vector<double> a(matrix.begin(), matrix.end());
  double norm = frobenius(a);
  if (norm == 0.0) return 0.0;
  for (double& v : a) v /= norm;
  double log_scale = std::log(norm);  // W^power = exp(log_scale) · a
  double power = 1.0;
  double estimate = norm;
  std::vector<double> sq(n * n);
  for (int it = 0; it < max_iterations; ++it) {
    std::fill(sq.begin(), sq.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t p = 0; p < n; ++p) {
        const double s = a[i * n + p];
        if (s == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) sq[i * n + j] += s * a[p * n + j];
      }
    const double sq_norm = frobenius(sq);
    if (sq_norm == 0.0) return 0.0;  // nilpotent
    for (std::size_t i = 0; i < sq.size(); ++i) a[i] = sq[i] / sq_norm;
    log_scale = 2.0 * log_scale + std::log(sq_norm);
    power *= 2.0;
    const double next = std::exp(log_scale / power);
    const double change = std::abs(next - estimate) / next;
    estimate = next;
    if (change < 1e-6 && it > 0) return estimate;
  }
  throw numeric_error("spectral radius estimate did not converge after " +
                      std::to_string(max_iterations) + " iterations; try a different seed");
}

Reservoir Reservoir::build(const ReservoirConfig& config, std::size_t input_dim, std::uint64_t seed) {
  config.validate();
  if (input_dim < 1) throw config_error("reservoir input dimension must be >= 1");
  const std::size_t n = config.size;
  Rng rng(seed);
  std::vector<float> w_in(n * input_dim);
  for (auto& w : w_in)
    w = static_cast<float>(rng.uniform(-config.input_scale, config.input_scale));

  std::vector<double> w(n * n, 0.0);
  for (auto& v : w)
    if (!rng.bernoulli(config.sparsity)) v = rng.uniform(-1.0, 1.0);
  // Every unit gets at least one recurrent connection.
  for (std::size_t i = 0; i < n; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < n && !any; ++j) any = w[i * n + j] != 0.0;
    if (!any) {
      double v = 0.0;
      while (v == 0.0) v = rng.uniform(-1.0, 1.0);
      w[i * n + rng.below(n)] = v;
    }
  }
  const double measured = estimate_spectral_radius(w, n);
  if (measured == 0.0) {
    throw numeric_error("recurrent matrix has spectral radius 0 (nilpotent); try a different seed");
  }
  const double factor = config.spectral_radius / measured;
  std::vector<float> w_res(n * n);
  for (std::size_t i = 0; i < w.size(); ++i) w_res[i] = static_cast<float>(w[i] * factor);
  return Reservoir(config, input_dim, seed, std::move(w_in), std::move(w_res));
}

Reservoir::Reservoir(const ReservoirConfig& config, std::size_t input_dim, std::uint64_t seed,
                     std::vector<float> w_in, std::vector<float> w_res)
    : config_(config), input_dim_(input_dim), seed_(seed), w_in_(std::move(w_in)),
      w_res_(std::move(w_res)) {
  config_.validate();
  if (w_in_.size() != config_.size * input_dim_ || w_res_.size() != config_.size * config_.size) {
    throw dimension_error("reservoir matrices do not match size " + std::to_string(config_.size) +
                          " and input dimension " + std::to_string(input_dim_));
  }
}

template <typename T>
std::vector<T> Reservoir::step(std::span<const T> state, std::span<const T> input) const {
  const std::size_t n = size();
  if (input.size() != input_dim_) {
    throw dimension_error("reservoir input of length " + std::to_string(input.size()) +
                          ", expected " + std::to_string(input_dim_));
  }
  if (state.size() != n) {
    throw dimension_error("reservoir state of length " + std::to_string(state.size()) +
                          ", expected " + std::to_string(n));
  }
  const T alpha = static_cast<T>(config_.leak_rate);
  std::vector<T> next(n);
  for (std::size_t i = 0; i < n; ++i) {
    T drive = T(0);
    const float* win = w_in_.data() + i * input_dim_;
    for (std::size_t j = 0; j < input_dim_; ++j) drive += static_cast<T>(win[j]) * input[j];
    const float* wr = w_res_.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) drive += static_cast<T>(wr[j]) * state[j];
    next[i] = (T(1) - alpha) * state[i] + alpha * std::tanh(drive);
  }
  return next;
}

template <typename T>
std::vector<T> Reservoir::run(std::span<const T> patches, std::size_t num_patches,
                              std::span<const T> initial, const std::vector<bool>* zero_input) const {
  if (patches.size() != num_patches * input_dim_) {
    throw dimension_error("patch block of " + std::to_string(patches.size()) + " values for " +
                          std::to_string(num_patches) + " patches of width " +
                          std::to_string(input_dim_));
  }
  if (zero_input && zero_input->size() != num_patches)
    throw dimension_error("zero-input mask length differs from patch count");
  const std::size_t n = size();
  std::vector<T> state = initial.empty() ? std::vector<T>(n, T(0))
                                         : std::vector<T>(initial.begin(), initial.end());
  const std::vector<T> zeros(input_dim_, T(0));
  std::vector<T> states;
  states.reserve(num_patches * n);
  for (std::size_t p = 0; p < num_patches; ++p) {
    std::span<const T> u = (zero_input && (*zero_input)[p])
                               ? std::span<const T>(zeros)
                               : patches.subspan(p * input_dim_, input_dim_);
    state = step<T>(state, u);
    states.insert(states.end(), state.begin(), state.end());
  }
  return states;
}

template std::vector<float> Reservoir::step<float>(std::span<const float>, std::span<const float>) const;
template std::vector<double> Reservoir::step<double>(std::span<const double>, std::span<const double>) const;
template std::vector<float> Reservoir::run<float>(std::span<const float>, std::size_t,
                                                  std::span<const float>, const std::vector<bool>*) const;
template std::vector<double> Reservoir::run<double>(std::span<const double>, std::size_t,
                                                    std::span<const double>, const std::vector<bool>*) const;

}  // namespace ramat
