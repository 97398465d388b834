#include "ramat/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ramat/error.hpp"

namespace ramat {

void LrSchedule::validate() const {
  if (total_steps == 0) throw config_error("total_steps must be >= 1");
  if (warmup_steps >= total_steps) {
    throw config_error("warmup_steps (" + std::to_string(warmup_steps) +
                       ") must be below total_steps (" + std::to_string(total_steps) + ")");
  }
  if (!(lr_peak > 0.0) || lr_min < 0.0 || lr_min > lr_peak)
    throw config_error("learning rates must satisfy 0 <= lr_min <= lr_peak, lr_peak > 0");
}

double cosine_lr(std::size_t step, const LrSchedule& s) {
  s.validate();
  if (step > s.total_steps) throw config_error("step beyond total_steps");
  if (step < s.warmup_steps) {
    return s.lr_peak * static_cast<double>(step) / static_cast<double>(s.warmup_steps);
  }
  if (step == s.total_steps) return s.lr_min;
  const double progress = static_cast<double>(step - s.warmup_steps) /
                          static_cast<double>(s.total_steps - s.warmup_steps);
  return s.lr_min + 0.5 * (s.lr_peak - s.lr_min) * (1.0 + std::cos(std::numbers::pi * progress));
}

ClipResult clip_grad_norm(const NamedGrads& tensors, double max_norm) {
  if (!(max_norm > 0.0)) throw config_error("max_norm must be > 0");
  double sq = 0.0;
  for (const auto& [name, t] : tensors) {
    for (float g : t.grad()) {
      if (!std::isfinite(g)) throw numeric_error("non-finite gradient in '" + name + "'");
      sq += static_cast<double>(g) * g;
    }
  }
  ClipResult res;
  res.norm = std::sqrt(sq);
  res.clipped_norm = res.norm;
  if (res.norm > max_norm) {
    const double factor = max_norm / res.norm;
    double after = 0.0;
    for (const auto& [name, t] : tensors) {
      for (float& g : t.grad()) {
        g = static_cast<float>(g * factor);
        after += static_cast<double>(g) * g;
      }
    }
    res.clipped = true;
    res.clipped_norm = std::sqrt(after);
  }
  return res;
}

AdamW::AdamW(AdamWConfig hyper, const ModelParams<float>& params,
             const std::vector<std::string>& trainable) {
  state_.hyper = hyper;
  for (const auto& name : trainable) {
    const auto n = params.get(name).numel();
    state_.moments[name] = MomentBuffers{std::vector<float>(n, 0.0f), std::vector<float>(n, 0.0f)};
  }
}

void AdamW::step(ModelParams<float>& params, double lr,
                 const std::map<std::string, double>& multipliers) {
  const auto& h = state_.hyper;
  ++state_.step;
  const double t = static_cast<double>(state_.step);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  for (auto& [name, buffers] : state_.moments) {
    const Tensor<float>& param = params.get(name);
    const auto grad = param.grad();
    if (grad.size() != param.numel()) {
      throw contract_error("no gradient for trainable parameter '" + name + "'");
    }
    const auto it = multipliers.find(name);
    const double lr_eff = lr * (it == multipliers.end() ? 1.0 : it->second);
    auto w = Tensor<float>(param).mutable_data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double g = grad[i];
      const double m = h.beta1 * buffers.m[i] + (1.0 - h.beta1) * g;
      const double v = h.beta2 * buffers.v[i] + (1.0 - h.beta2) * g * g;
      buffers.m[i] = static_cast<float>(m);
      buffers.v[i] = static_cast<float>(v);
      const double update = (m / c1) / (std::sqrt(v / c2) + h.eps);
      const double wi = w[i];
      w[i] = static_cast<float>(wi - lr_eff * update - lr_eff * h.weight_decay * wi);
    }
  }
}

std::map<std::string, double> layerwise_multipliers(double decay, std::size_t num_layers,
                                                    const ModelParams<float>& params) {
  if (!(decay > 0.0 && decay <= 1.0)) throw config_error("layer decay must be in (0, 1]");
  std::map<std::string, double> out;
  const double layers = static_cast<double>(num_layers);
  for (const auto& e : params.entries()) {
    switch (e.group) {
      case ParamGroup::kHead:
      case ParamGroup::kDecoder:
        out[e.name] = 1.0;
        break;
      case ParamGroup::kBlock:
        out[e.name] = std::pow(decay, layers - e.layer);
        break;
      case ParamGroup::kEmbed:
      case ParamGroup::kMaskToken:
        out[e.name] = std::pow(decay, layers + 1.0);
        break;
    }
  }
  return out;
}

std::string to_string(FreezeMode mode) {
  switch (mode) {
    case FreezeMode::kHeadOnly:
      return "head_only";
    case FreezeMode::kTopKBlocks:
      return "top_k";
    case FreezeMode::kFull:
      return "full";
  }
  return "?";
}

FreezeMode freeze_mode_from_string(const std::string& s) {
  if (s == "head_only") return FreezeMode::kHeadOnly;
  if (s == "top_k") return FreezeMode::kTopKBlocks;
  if (s == "full") return FreezeMode::kFull;
  throw config_error("unknown freeze mode '" + s + "' (expected head_only, top_k or full)");
}

std::vector<std::string> FreezePlan::trainable(const ModelParams<float>& params,
                                               std::size_t num_layers) const {
  if (mode == FreezeMode::kTopKBlocks && top_k > num_layers) {
    throw config_error("top_k " + std::to_string(top_k) + " exceeds " + std::to_string(num_layers) +
                       " encoder blocks");
  }
  std::vector<std::string> out;
  for (const auto& e : params.entries()) {
    bool train = false;
    switch (e.group) {
      case ParamGroup::kHead:
        train = true;
        break;
      case ParamGroup::kBlock:
        train = mode == FreezeMode::kFull ||
                (mode == FreezeMode::kTopKBlocks &&
                 static_cast<std::size_t>(e.layer) + top_k >= num_layers);
        break;
      case ParamGroup::kEmbed:
        train = mode == FreezeMode::kFull;
        break;
      case ParamGroup::kMaskToken:
      case ParamGroup::kDecoder:
        break;
    }
    if (train) out.push_back(e.name);
  }
  return out;
}

std::vector<std::string> FreezePlan::frozen(const ModelParams<float>& params,
                                            std::size_t num_layers) const {
  const auto train = trainable(params, num_layers);
  std::vector<std::string> out;
  for (const auto& e : params.entries())
    if (std::find(train.begin(), train.end(), e.name) == train.end()) out.push_back(e.name);
  return out;
}

bool EarlyStopping::update(double metric) {
  if (!has_best_ || metric < best_) {
    best_ = metric;
    has_best_ = true;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

namespace {

NamedGrads trainable_grads(const ModelParams<float>& params, const AdamW& opt) {
  NamedGrads out;
  for (const auto& e : params.entries())
    if (opt.is_trainable(e.name)) out.emplace_back(e.name, e.tensor);
  return out;
}

void check_params_finite(const ModelParams<float>& params, std::uint64_t step) {
  for (const auto& e : params.entries()) {
    for (float v : e.tensor.data()) {
      if (!std::isfinite(v)) {
        throw numeric_error("step " + std::to_string(step) + ": parameter '" + e.name +
                            "' became non-finite");
      }
    }
  }
}

struct WindowRef {
  std::size_t segment;
  std::size_t offset;  // first row
};

std::vector<WindowRef> enumerate_windows(const std::vector<std::vector<float>>& segments,
                                         const ModelConfig& model, std::size_t stride) {
  std::vector<WindowRef> out;
  const std::size_t k = model.channels;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (segments[s].size() % k != 0) throw dimension_error("segment width does not match channels");
    const std::size_t len = segments[s].size() / k;
    for (std::size_t start = 0; start + model.window_length <= len; start += stride)
      out.push_back({s, start});
  }
  return out;
}

}  // namespace

ModelState init_model_state(const ModelConfig& model, const ReservoirConfig& reservoir,
                            std::uint64_t seed, Scalers scalers) {
  model.validate();
  ModelState st;
  st.model = model;
  st.reservoir = Reservoir::build(reservoir, model.patch_dim(), derive_seed(seed, 0));
  Rng init_rng(derive_seed(seed, 1));
  st.params = ModelParams<float>::init(model, reservoir.size, init_rng);
  st.scalers = std::move(scalers);
  st.rng = Rng(derive_seed(seed, 2));
  return st;
}

PretrainPlan plan_pretraining(const std::vector<std::vector<float>>& segments,
                              const ModelConfig& model, const PretrainOptions& options) {
  if (options.batch_size == 0) throw config_error("batch_size must be >= 1");
  if (options.epochs == 0) throw config_error("epochs must be >= 1");
  const std::size_t stride = options.stride == 0 ? model.window_length : options.stride;
  PretrainPlan plan;
  plan.windows_per_epoch = enumerate_windows(segments, model, stride).size();
  if (plan.windows_per_epoch == 0) {
    throw data_error("no pretraining window of length " + std::to_string(model.window_length) +
                     " fits in the data");
  }
  plan.steps_per_epoch = (plan.windows_per_epoch + options.batch_size - 1) / options.batch_size;
  std::size_t total = options.epochs * plan.steps_per_epoch;
  if (options.max_steps > 0) total = std::min(total, options.max_steps);
  plan.schedule = {options.warmup_steps, total, options.lr_peak, options.lr_min};
  plan.schedule.validate();
  return plan;
}

void pretrain(const std::vector<std::vector<float>>& segments, ModelState& state,
              const PretrainOptions& options, Trace& trace, std::uint64_t halt_at_step) {
  const ModelConfig& cfg = state.model;
  const auto plan = plan_pretraining(segments, cfg, options);
  const std::size_t stride = options.stride == 0 ? cfg.window_length : options.stride;
  const auto windows = enumerate_windows(segments, cfg, stride);

  std::vector<std::string> trainable;
  for (const auto& e : state.params.entries())
    if (e.group != ParamGroup::kHead) trainable.push_back(e.name);
  for (auto& e : state.params.entries()) e.tensor.set_requires_grad(e.group != ParamGroup::kHead);

  AdamW opt = state.optimizer ? AdamW(*state.optimizer)
                              : AdamW(options.adamw, state.params, trainable);
  RaMat<float> model(cfg, state.params);
  const std::size_t k = cfg.channels;
  const std::size_t total = plan.schedule.total_steps;

  for (std::uint64_t step = state.step; step < total; ++step) {
    if (halt_at_step > 0 && step >= halt_at_step) break;
    const std::size_t batch = step % plan.steps_per_epoch;
    const std::size_t first = batch * options.batch_size;
    const std::size_t last = std::min(first + options.batch_size, windows.size());

    state.params.zero_grad();
    Tape<float> tape;
    Tensor<float> total_loss;
    for (std::size_t w = first; w < last; ++w) {
      const auto& ref = windows[w];
      const std::span<const float> window(segments[ref.segment].data() + ref.offset * k,
                                          cfg.window_length * k);
      auto seq = patchify(cfg, window);
      seq.mask = sample_mask(seq.num_patches, cfg.mask_ratio, state.rng);
      auto loss = model.pretrain_loss(tape, state.reservoir, seq);
      total_loss = total_loss.defined() ? ops::add(tape, total_loss, loss) : loss;
    }
    auto loss = ops::scale(tape, total_loss, 1.0f / static_cast<float>(last - first));
    if (!std::isfinite(loss.item()))
      throw numeric_error("step " + std::to_string(step) + ": non-finite pretraining loss");
    tape.backward(loss);

    ClipResult clip;
    try {
      clip = clip_grad_norm(trainable_grads(state.params, opt), options.max_norm);
    } catch (const Error& e) {
      throw Error(e.kind(), "step " + std::to_string(step) + ": " + e.what());
    }
    const double lr = cosine_lr(step, plan.schedule);
    opt.step(state.params, lr);
    check_params_finite(state.params, step);

    trace.push_back({step, "train", "masked_mse", loss.item(), lr});
    trace.push_back({step, "train", "grad_norm", clip.norm, lr});
    trace.push_back({step, "train", "grad_norm_clipped", clip.clipped_norm, lr});
    state.step = step + 1;
  }
  state.optimizer = opt.state();
  for (auto& e : state.params.entries()) e.tensor.set_requires_grad(true);
}

FinetuneReport finetune(ModelState& state, const SequenceDataset& data, const FinetuneOptions& options,
                        Trace& trace, const std::vector<std::size_t>* labels) {
  const ModelConfig& cfg = state.model;
  const bool classify = cfg.head == HeadKind::kClassification;
  if (classify && !labels) throw config_error("classification head needs class labels");
  if (!classify && labels) throw config_error("class labels given for a regression head");
  if (labels && labels->size() != data.size()) throw config_error("one label per sample required");
  check_scaler_channels(state.scalers, data.names);
  if (data.n_seq != cfg.window_length) {
    throw config_error("labeled windows have " + std::to_string(data.n_seq) +
                       " rows but the model expects window_length " +
                       std::to_string(cfg.window_length));
  }
  if (data.channels() != cfg.channels) throw config_error("labeled data channel count differs from model");
  if (data.size() == 0) throw data_error("no labeled samples");
  if (options.batch_size == 0 || options.epochs == 0) throw config_error("batch_size and epochs must be >= 1");
  if (!(options.val_fraction >= 0.0 && options.val_fraction < 1.0))
    throw config_error("val_fraction must be in [0, 1)");

  std::size_t n_val = static_cast<std::size_t>(std::floor(data.size() * options.val_fraction));
  if (options.val_fraction > 0.0 && n_val == 0 && data.size() >= 2) n_val = 1;
  const std::size_t n_train = data.size() - n_val;
  if (n_train == 0) throw data_error("no training samples left after the validation split");

  state.params.reset_head(state.rng);
  const auto trainable = options.freeze.trainable(state.params, cfg.num_layers);
  for (auto& e : state.params.entries())
    e.tensor.set_requires_grad(std::find(trainable.begin(), trainable.end(), e.name) != trainable.end());
  AdamW opt(options.adamw, state.params, trainable);
  const auto multipliers = layerwise_multipliers(options.layer_decay, cfg.num_layers, state.params);
  RaMat<float> model(cfg, state.params);

  // The reservoir is fixed and fine-tuning never masks, so states are computed once.
  std::vector<Tensor<float>> states;
  states.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    states.push_back(model.reservoir_states(state.reservoir, patchify(cfg, data.window(i)), false));

  auto sample_loss = [&](Tape<float>& tape, std::size_t i) {
    const auto out = model.head_logits(tape, states[i]);
    if (classify) return ops::cross_entropy(tape, out, (*labels)[i]);
    const auto target = data.target(i);
    return ops::mse(tape, out, Tensor<float>({1, cfg.channels}, {target.begin(), target.end()}));
  };

  FinetuneReport report;
  EarlyStopping stopper(options.patience);
  ModelParams<float> best = state.params.clone();
  std::vector<std::size_t> order(n_train);
  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = 0; i < n_train; ++i) order[i] = i;
    for (std::size_t i = n_train; i > 1; --i) std::swap(order[i - 1], order[state.rng.below(i)]);

    for (std::size_t first = 0; first < n_train; first += options.batch_size) {
      const std::size_t last = std::min(first + options.batch_size, n_train);
      state.params.zero_grad();
      Tape<float> tape;
      Tensor<float> total;
      for (std::size_t b = first; b < last; ++b) {
        auto l = sample_loss(tape, order[b]);
        total = total.defined() ? ops::add(tape, total, l) : l;
      }
      auto loss = ops::scale(tape, total, 1.0f / static_cast<float>(last - first));
      if (!std::isfinite(loss.item()))
        throw numeric_error("fine-tuning step " + std::to_string(step) + ": non-finite loss");
      tape.backward(loss);
      const auto clip = clip_grad_norm(trainable_grads(state.params, opt), options.max_norm);
      opt.step(state.params, options.lr, multipliers);
      check_params_finite(state.params, step);
      trace.push_back({step, "train", classify ? "cross_entropy" : "mse", loss.item(), options.lr});
      trace.push_back({step, "train", "grad_norm_clipped", clip.clipped_norm, options.lr});
      ++step;
    }
    report.epochs_run = epoch + 1;

    if (n_val == 0) {
      best = state.params.clone();
      report.best_epoch = epoch + 1;
      continue;
    }
    double val = 0.0;
    {
      Tape<float> tape(Tape<float>::Mode::kNoGrad);
      for (std::size_t i = n_train; i < data.size(); ++i) val += sample_loss(tape, i).item();
      val /= static_cast<double>(n_val);
    }
    trace.push_back({step, "val", classify ? "cross_entropy" : "mse", val, options.lr});
    if (stopper.update(val)) {
      best = state.params.clone();
      report.best_epoch = epoch + 1;
      report.best_val = val;
    }
    if (stopper.should_stop()) {
      report.early_stopped = true;
      trace.push_back({step, "val", "early_stop_epoch", static_cast<double>(epoch + 1), options.lr});
      break;
    }
  }

  for (auto& e : state.params.entries()) {
    const auto& src = best.get(e.name).data();
    std::copy(src.begin(), src.end(), e.tensor.mutable_data().begin());
    e.tensor.set_requires_grad(true);
  }
  state.optimizer.reset();
  return report;
}

std::vector<float> predict(const ModelState& state, const SequenceDataset& data) {
  RaMat<float> model(state.model, state.params);
  std::vector<float> out;
  out.reserve(data.size() * state.model.head_outputs());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto p = model.forward_head(state.reservoir, data.window(i));
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<double> channel_mse(std::span<const float> predictions, std::span<const float> targets,
                                std::size_t channels) {
  if (predictions.size() != targets.size() || channels == 0 || targets.size() % channels != 0)
    throw dimension_error("prediction and target blocks do not align");
  const std::size_t rows = targets.size() / channels;
  std::vector<double> out(channels, 0.0);
  if (rows == 0) return out;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < channels; ++c) {
      const double d = static_cast<double>(predictions[r * channels + c]) - targets[r * channels + c];
      out[c] += d * d;
    }
  for (auto& v : out) v /= static_cast<double>(rows);
  return out;
}

double mean_mse(std::span<const float> predictions, std::span<const float> targets) {
  if (predictions.size() != targets.size() || targets.empty())
    throw dimension_error("prediction and target blocks do not align");
  double total = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double d = static_cast<double>(predictions[i]) - targets[i];
    total += d * d;
  }
  return total / static_cast<double>(targets.size());
}

}  // namespace ramat
