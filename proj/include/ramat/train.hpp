#ifndef RAMAT_TRAIN_HPP
#define RAMAT_TRAIN_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ramat/model.hpp"
#include "ramat/pipeline.hpp"
#include "ramat/reservoir.hpp"
#include "ramat/rng.hpp"

namespace ramat {

// Linear warmup to lr_peak, then half-cosine decay to lr_min at total_steps.
struct LrSchedule {
  std::size_t warmup_steps = 100;
  std::size_t total_steps = 1000;
  double lr_peak = 1e-3;
  double lr_min = 0.0;

  void validate() const;
};

double cosine_lr(std::size_t step, const LrSchedule& schedule);

using NamedGrads = std::vector<std::pair<std::string, Tensor<float>>>;

struct ClipResult {
  double norm = 0.0;         ///< global L2 norm before clipping
  double clipped_norm = 0.0; ///< global L2 norm after clipping
  bool clipped = false;
};

/// Rescales all gradients by max_norm / norm when their global L2 norm
/// exceeds max_norm. Non-finite gradients are a numeric error naming the
/// tensor.
ClipResult clip_grad_norm(const NamedGrads& tensors, double max_norm);

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct MomentBuffers {
  std::vector<float> m;
  std::vector<float> v;
};

struct OptimizerState {
  AdamWConfig hyper;
  std::uint64_t step = 0;
  std::map<std::string, MomentBuffers> moments;  ///< trainable names only
};

// AdamW with decoupled weight decay:
//   w ← w − lr·(m̂ / (√v̂ + eps)) − lr·λ·w
class AdamW {
 public:
  AdamW(AdamWConfig hyper, const ModelParams<float>& params,
        const std::vector<std::string>& trainable);
  explicit AdamW(OptimizerState state) : state_(std::move(state)) {}

  /// One update of every trainable parameter; lr is scaled per name by
  /// `multipliers` (absent names use 1).
  void step(ModelParams<float>& params, double lr,
            const std::map<std::string, double>& multipliers = {});

  const OptimizerState& state() const { return state_; }
  bool is_trainable(const std::string& name) const { return state_.moments.contains(name); }

 private:
  OptimizerState state_;
};

/// head 1, block ℓ decay^(L−ℓ), embedding and mask token decay^(L+1).
std::map<std::string, double> layerwise_multipliers(double decay, std::size_t num_layers,
                                                    const ModelParams<float>& params);

enum class FreezeMode { kHeadOnly, kTopKBlocks, kFull };

std::string to_string(FreezeMode mode);
FreezeMode freeze_mode_from_string(const std::string& s);

// Which parameters fine-tuning may update. The reservoir is never a
// parameter, and the pretraining-only decoder and mask token stay frozen.
struct FreezePlan {
  FreezeMode mode = FreezeMode::kHeadOnly;
  std::size_t top_k = 1;

  std::vector<std::string> trainable(const ModelParams<float>& params, std::size_t num_layers) const;
  std::vector<std::string> frozen(const ModelParams<float>& params, std::size_t num_layers) const;
};

class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Records one epoch's validation metric; returns true on a new best.
  bool update(double metric);
  bool should_stop() const { return since_best_ > patience_; }
  double best() const { return best_; }
  std::size_t epochs_since_best() const { return since_best_; }

 private:
  std::size_t patience_;
  double best_ = 0.0;
  bool has_best_ = false;
  std::size_t since_best_ = 0;
};

struct TraceRow {
  std::uint64_t step = 0;
  std::string split;
  std::string metric;
  double value = 0.0;
  double lr = 0.0;
};

using Trace = std::vector<TraceRow>;

// Everything a checkpoint persists.
struct ModelState {
  ModelConfig model;
  Reservoir reservoir;
  ModelParams<float> params;
  Scalers scalers;
  std::optional<OptimizerState> optimizer;
  Rng rng;
  std::uint64_t step = 0;
};

/// Fresh reservoir and parameters from one seed.
ModelState init_model_state(const ModelConfig& model, const ReservoirConfig& reservoir,
                            std::uint64_t seed, Scalers scalers);

struct PretrainOptions {
  std::size_t epochs = 1;
  std::size_t batch_size = 1;
  std::size_t stride = 0;  ///< 0 means window_length (non-overlapping)
  std::size_t warmup_steps = 100;
  std::size_t max_steps = 0;  ///< 0 means epochs × batches per epoch
  double lr_peak = 1e-3;
  double lr_min = 0.0;
  double max_norm = 1.0;
  AdamWConfig adamw;
};

struct PretrainPlan {
  std::size_t windows_per_epoch = 0;
  std::size_t steps_per_epoch = 0;
  LrSchedule schedule;
};

/// Window count and schedule that pretrain() will use on these segments.
PretrainPlan plan_pretraining(const std::vector<std::vector<float>>& segments,
                              const ModelConfig& model, const PretrainOptions& options);

/// Masked-patch pretraining over standardized segments ([len × K] each).
/// Continues from state.step, so a restored checkpoint resumes where it left
/// off; halts early once state.step reaches `halt_at_step` if nonzero. Trace
/// rows are appended as they are produced and survive a thrown error.
void pretrain(const std::vector<std::vector<float>>& segments, ModelState& state,
              const PretrainOptions& options, Trace& trace, std::uint64_t halt_at_step = 0);

struct FinetuneOptions {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double layer_decay = 1.0;
  FreezePlan freeze;
  std::size_t patience = 3;
  double val_fraction = 0.1;
  double max_norm = 1.0;
  AdamWConfig adamw;
};

struct FinetuneReport {
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_val = 0.0;
  bool early_stopped = false;
};

/// Supervised fine-tuning on standardized (window, target) pairs, or on
/// (window, class label) pairs when the head is a classifier. The last
/// val_fraction of samples is held out in order; the best-validation
/// parameters are kept.
FinetuneReport finetune(ModelState& state, const SequenceDataset& data, const FinetuneOptions& options,
                        Trace& trace, const std::vector<std::size_t>* labels = nullptr);

/// One-step predictions [M × K] for standardized windows.
std::vector<float> predict(const ModelState& state, const SequenceDataset& data);

/// Mean squared error per channel of interleaved [M × K] rows.
std::vector<double> channel_mse(std::span<const float> predictions, std::span<const float> targets,
                                std::size_t channels);

double mean_mse(std::span<const float> predictions, std::span<const float> targets);

}  // namespace ramat

#endif  // RAMAT_TRAIN_HPP
