#ifndef RAMAT_MODEL_HPP
#define RAMAT_MODEL_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ramat/ops.hpp"
#include "ramat/reservoir.hpp"
#include "ramat/rng.hpp"
#include "ramat/tensor.hpp"

namespace ramat {

enum class HeadKind { kRegression, kClassification };

std::string to_string(HeadKind kind);
HeadKind head_kind_from_string(const std::string& s);

struct ModelConfig {
  std::size_t window_length = 64;
  std::size_t patch_length = 8;
  std::size_t channels = 3;
  double mask_ratio = 0.3;
  std::size_t embed_dim = 32;
  std::size_t num_layers = 2;
  std::size_t num_heads = 4;
  std::size_t ffn_dim = 64;
  HeadKind head = HeadKind::kRegression;
  std::size_t num_classes = 2;
  double layer_norm_eps = 1e-5;

  std::size_t num_patches() const { return window_length / patch_length; }
  std::size_t patch_dim() const { return patch_length * channels; }
  std::size_t head_outputs() const {
    return head == HeadKind::kRegression ? channels : num_classes;
  }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// A window cut into P non-overlapping patches. Patch p holds timesteps
// [p·L, (p+1)·L), time-major with the K channels of each timestep adjacent,
// which is exactly the row-major window memory.
struct PatchSequence {
  std::size_t num_patches = 0;
  std::size_t patch_dim = 0;
  std::vector<float> patches;  ///< [P × patch_dim]
  std::vector<bool> mask;      ///< true = masked

  std::span<const float> patch(std::size_t p) const {
    return {patches.data() + p * patch_dim, patch_dim};
  }
  std::vector<std::size_t> masked_indices() const;
};

PatchSequence patchify(const ModelConfig& config, std::span<const float> window);
std::vector<float> unpatchify(const PatchSequence& seq);

/// Bernoulli(mask_ratio) per patch, then forced to at least one masked and
/// one visible patch by flipping a uniformly chosen patch.
std::vector<bool> sample_mask(std::size_t num_patches, double mask_ratio, Rng& rng);

enum class ParamGroup { kEmbed, kMaskToken, kBlock, kDecoder, kHead };

template <typename T>
struct NamedParam {
  std::string name;
  ParamGroup group;
  int layer;  ///< encoder block index for kBlock, otherwise -1
  Tensor<T> tensor;
};

// Every trainable tensor of the network, in a fixed registration order.
// Freezing and per-layer learning rates refer to parameters by name.
template <typename T>
class ModelParams {
 public:
  ModelParams() = default;

  static ModelParams init(const ModelConfig& config, std::size_t reservoir_size, Rng& rng);

  const Tensor<T>& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::vector<NamedParam<T>>& entries() { return entries_; }
  const std::vector<NamedParam<T>>& entries() const { return entries_; }

  void zero_grad();
  /// Fresh random head weights and zero bias.
  void reset_head(Rng& rng);

  template <typename U>
  ModelParams<U> cast() const;

  /// Deep copy: no storage shared with this instance.
  ModelParams clone() const;

  void add(std::string name, ParamGroup group, int layer, Tensor<T> tensor);

 private:
  std::vector<NamedParam<T>> entries_;
};

/// Sinusoidal position table [P × E]: even columns sin, odd columns cos of
/// p / 10000^(2i/E).
template <typename T>
Tensor<T> positional_table(std::size_t num_patches, std::size_t embed_dim);

template <typename T>
struct EncodeTrace {
  std::vector<Tensor<T>> attention;  ///< [P × P] per layer, per head
};

template <typename T>
class RaMat {
 public:
  RaMat(ModelConfig config, ModelParams<T> params);

  const ModelConfig& config() const { return config_; }
  ModelParams<T>& params() { return params_; }
  const ModelParams<T>& params() const { return params_; }

  /// Reservoir states [P × R] for the patches of one window. Masked patches
  /// are fed as zeros only if the reservoir is configured to do so and a
  /// mask is given.
  Tensor<T> reservoir_states(const Reservoir& reservoir, const PatchSequence& seq,
                             bool apply_mask) const;

  /// token_i = W·h_i + b + pos_i, then mask_token + pos_i at masked positions.
  Tensor<T> embed(Tape<T>& tape, const Tensor<T>& states, const std::vector<bool>* mask) const;

  /// Pre-norm blocks: x += MHSA(LN(x)); x += FFN(LN(x)).
  Tensor<T> encode(Tape<T>& tape, const Tensor<T>& tokens, EncodeTrace<T>* trace = nullptr) const;

  /// One linear map per masked token back to patch space [(#masked) × patch_dim].
  Tensor<T> decode_masked(Tape<T>& tape, const Tensor<T>& contextual,
                          const std::vector<bool>& mask) const;

  /// MSE over every element of the masked patches against their original values.
  Tensor<T> masked_mse(Tape<T>& tape, const Tensor<T>& reconstruction,
                       const PatchSequence& seq) const;

  /// Full pretraining objective for one window with a given mask.
  Tensor<T> pretrain_loss(Tape<T>& tape, const Reservoir& reservoir,
                          const PatchSequence& seq) const;

  /// Mean-pooled encoder output [1 × E] without any masking.
  Tensor<T> pooled(Tape<T>& tape, const Tensor<T>& states) const;

  /// Regression predictions or classification logits [1 × outputs].
  Tensor<T> head_logits(Tape<T>& tape, const Tensor<T>& states) const;

  /// Inference: K-vector regression or C-vector class probabilities.
  std::vector<T> forward_head(const Reservoir& reservoir, std::span<const float> window) const;

 private:
  ModelConfig config_;
  ModelParams<T> params_;
  Tensor<T> positions_;
};

}  // namespace ramat

#endif  // RAMAT_MODEL_HPP
