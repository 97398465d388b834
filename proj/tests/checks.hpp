#ifndef RAMAT_TEST_CHECKS_HPP
#define RAMAT_TEST_CHECKS_HPP

// Reusable checks shared by the unit tests and the acceptance binary.

#include <cstdint>
#include <vector>

#include "ramat/gradcheck.hpp"
#include "ramat/model.hpp"
#include "ramat/ops.hpp"
#include "ramat/reservoir.hpp"
#include "test_support.hpp"

namespace ramat::testing {

// P=4, patch 4, K=2, E=8, 2 heads, 1 layer, R=16.
inline ModelConfig tiny_model() {
  ModelConfig m;
  m.window_length = 16;
  m.patch_length = 4;
  m.channels = 2;
  m.embed_dim = 8;
  m.num_heads = 2;
  m.num_layers = 1;
  m.ffn_dim = 16;
  return m;
}

inline ReservoirConfig tiny_reservoir() {
  ReservoirConfig r;
  r.size = 16;
  return r;
}

// Random (non-zero) values in every parameter, including biases and the
// head, so that no gradient is trivially zero.
inline ModelParams<double> randomized_params(const ModelConfig& m, std::size_t reservoir_size,
                                             std::uint64_t seed) {
  Rng rng(seed);
  auto params = ModelParams<float>::init(m, reservoir_size, rng).cast<double>();
  for (auto& e : params.entries()) {
    for (auto& v : e.tensor.mutable_data()) v += 0.1 * rng.normal();
    e.tensor.set_requires_grad(true);
  }
  return params;
}

// Gradient check of pretraining loss plus regression head loss over every
// parameter of the tiny model.
inline GradCheckResult full_model_gradcheck(std::uint64_t seed = 1) {
  const auto m = tiny_model();
  const auto reservoir = Reservoir::build(tiny_reservoir(), m.patch_dim(), seed);
  auto params = randomized_params(m, reservoir.size(), seed + 1);
  RaMat<double> model(m, params);

  const auto window = normal_values<float>(m.window_length * m.channels, seed + 2);
  auto seq = patchify(m, window);
  seq.mask = {true, false, true, false};
  const Tensor<double> target({1, m.channels}, normal_values<double>(m.channels, seed + 3));
  const auto states = model.reservoir_states(reservoir, seq, false);

  NamedTensors named;
  for (const auto& e : model.params().entries()) named.emplace_back(e.name, e.tensor);
  return check_gradients(named, [&](Tape<double>& tape) {
    auto pre = model.pretrain_loss(tape, reservoir, seq);
    auto head = ops::mse(tape, model.head_logits(tape, states), target);
    return ops::add(tape, pre, head);
  });
}

// Fraction of masked patches over `draws` masks of P patches.
inline double masked_fraction(std::size_t draws, std::size_t num_patches, double ratio, std::uint64_t seed) {
  Rng rng(seed);
  std::size_t masked = 0;
  for (std::size_t d = 0; d < draws; ++d)
    for (bool b : sample_mask(num_patches, ratio, rng)) masked += b;
  return double(masked) / double(draws * num_patches);
}

// Pretraining loss before and after replacing the masked patches' content
// with noise. Returns true when the two losses are bit-identical.
inline bool loss_invariant_to_masked_content(bool zero_masked_input, std::uint64_t seed = 3) {
  const auto m = tiny_model();
  auto rc = tiny_reservoir();
  rc.zero_masked_input = zero_masked_input;
  const auto reservoir = Reservoir::build(rc, m.patch_dim(), seed);
  Rng rng(seed);
  RaMat<float> model(m, ModelParams<float>::init(m, rc.size, rng));
  const auto window = normal_values<float>(m.window_length * m.channels, seed + 1);
  auto seq = patchify(m, window);
  seq.mask = {false, true, false, true};
  auto altered = seq;
  for (std::size_t p : seq.masked_indices())
    for (std::size_t j = 0; j < seq.patch_dim; ++j) altered.patches[p * seq.patch_dim + j] = float(rng.normal()) * 5;

  // Targets stay the original content; only the model's input changes.
  Tape<float> tape(Tape<float>::Mode::kNoGrad);
  const auto recon_a = model.decode_masked(
      tape, model.encode(tape, model.embed(tape, model.reservoir_states(reservoir, seq, true), &seq.mask)),
      seq.mask);
  const auto recon_b = model.decode_masked(
      tape,
      model.encode(tape, model.embed(tape, model.reservoir_states(reservoir, altered, true), &altered.mask)),
      altered.mask);
  const float a = model.masked_mse(tape, recon_a, seq).item();
  const float b = model.masked_mse(tape, recon_b, seq).item();
  return a == b;
}

}  // namespace ramat::testing

#endif  // RAMAT_TEST_CHECKS_HPP
