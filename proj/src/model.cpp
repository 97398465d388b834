#include "ramat/model.hpp"

#include <algorithm>
#include <cmath>

#include "ramat/error.hpp"

namespace ramat {

std::string to_string(HeadKind kind) {
  return kind == HeadKind::kRegression ? "regression" : "classification";
}

HeadKind head_kind_from_string(const std::string& s) {
  if (s == "regression") return HeadKind::kRegression;
  if (s == "classification") return HeadKind::kClassification;
  throw config_error("unknown head kind '" + s + "'");
}

void ModelConfig::validate() const {
  if (patch_length == 0 || window_length % patch_length != 0) {
    throw config_error("window_length " + std::to_string(window_length) +
                       " is not divisible by patch_length " + std::to_string(patch_length));
  }
  if (num_patches() < 2) throw config_error("a window must contain at least 2 patches");
  if (channels == 0) throw config_error("channels must be >= 1");
  if (!(mask_ratio >= 0.0 && mask_ratio < 1.0)) throw config_error("mask_ratio must be in [0, 1)");
  if (embed_dim < 2) throw config_error("embed_dim must be >= 2");
  if (num_heads == 0 || embed_dim % num_heads != 0) {
    throw config_error("embed_dim " + std::to_string(embed_dim) + " is not divisible by num_heads " +
                       std::to_string(num_heads));
  }
  if (ffn_dim == 0) throw config_error("ffn_dim must be >= 1");
  if (head == HeadKind::kClassification && num_classes < 2)
    throw config_error("classification needs at least 2 classes");
  if (!(layer_norm_eps > 0.0)) throw config_error("layer_norm_eps must be > 0");
}

std::vector<std::size_t> PatchSequence::masked_indices() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) idx.push_back(i);
  return idx;
}

PatchSequence patchify(const ModelConfig& config, std::span<const float> window) {
  if (window.size() != config.window_length * config.channels) {
    throw dimension_error("window of " + std::to_string(window.size()) + " values, expected " +
                          std::to_string(config.window_length) + "x" +
                          std::to_string(config.channels));
  }
  PatchSequence seq;
  seq.num_patches = config.num_patches();
  seq.patch_dim = config.patch_dim();
  seq.patches.assign(window.begin(), window.end());
  seq.mask.assign(seq.num_patches, false);
  return seq;
}

std::vector<float> unpatchify(const PatchSequence& seq) { return seq.patches; }

std::vector<bool> sample_mask(std::size_t num_patches, double mask_ratio, Rng& rng) {
  std::vector<bool> mask(num_patches);
  std::size_t masked = 0;
  for (std::size_t i = 0; i < num_patches; ++i) {
    mask[i] = rng.bernoulli(mask_ratio);
    masked += mask[i];
  }
  if (masked == 0) {
    mask[rng.below(num_patches)] = true;
  } else if (masked == num_patches) {
    mask[rng.below(num_patches)] = false;
  }
  return mask;
}

namespace {

template <typename T>
Tensor<T> uniform_param(Shape shape, double bound, Rng& rng) {
  std::vector<T> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<T>(rng.uniform(-bound, bound));
  return Tensor<T>(std::move(shape), std::move(v), true);
}

template <typename T>
Tensor<T> constant_param(Shape shape, T value) {
  return Tensor<T>(shape, std::vector<T>(shape_numel(shape), value), true);
}

template <typename T>
Tensor<T> linear_weight(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  return uniform_param<T>({fan_in, fan_out}, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
}

}  // namespace

template <typename T>
void ModelParams<T>::add(std::string name, ParamGroup group, int layer, Tensor<T> tensor) {
  if (contains(name)) throw contract_error("duplicate parameter name '" + name + "'");
  entries_.push_back({std::move(name), group, layer, std::move(tensor)});
}

template <typename T>
ModelParams<T> ModelParams<T>::init(const ModelConfig& config, std::size_t reservoir_size, Rng& rng) {
  config.validate();
  const std::size_t e = config.embed_dim, f = config.ffn_dim;
  ModelParams p;
  p.add("embed.weight", ParamGroup::kEmbed, -1, linear_weight<T>(reservoir_size, e, rng));
  p.add("embed.bias", ParamGroup::kEmbed, -1, constant_param<T>({e}, T(0)));
  std::vector<T> token(e);
  for (auto& x : token) x = static_cast<T>(0.02 * rng.normal());
  p.add("mask_token", ParamGroup::kMaskToken, -1, Tensor<T>({e}, std::move(token), true));
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    const std::string pre = "blocks." + std::to_string(l) + ".";
    const int layer = static_cast<int>(l);
    auto block = [&](const std::string& n, Tensor<T> t) {
      p.add(pre + n, ParamGroup::kBlock, layer, std::move(t));
    };
    block("ln1.gamma", constant_param<T>({e}, T(1)));
    block("ln1.beta", constant_param<T>({e}, T(0)));
    for (const char* proj : {"q", "k", "v", "o"}) {
      block(std::string("attn.w") + proj, linear_weight<T>(e, e, rng));
      block(std::string("attn.b") + proj, constant_param<T>({e}, T(0)));
    }
    block("ln2.gamma", constant_param<T>({e}, T(1)));
    block("ln2.beta", constant_param<T>({e}, T(0)));
    block("ffn.w1", linear_weight<T>(e, f, rng));
    block("ffn.b1", constant_param<T>({f}, T(0)));
    block("ffn.w2", linear_weight<T>(f, e, rng));
    block("ffn.b2", constant_param<T>({e}, T(0)));
  }
  p.add("decoder.weight", ParamGroup::kDecoder, -1, linear_weight<T>(e, config.patch_dim(), rng));
  p.add("decoder.bias", ParamGroup::kDecoder, -1, constant_param<T>({config.patch_dim()}, T(0)));
  p.add("head.weight", ParamGroup::kHead, -1, linear_weight<T>(e, config.head_outputs(), rng));
  p.add("head.bias", ParamGroup::kHead, -1, constant_param<T>({config.head_outputs()}, T(0)));
  return p;
}

template <typename T>
const Tensor<T>& ModelParams<T>::get(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e.tensor;
  throw contract_error("unknown parameter '" + name + "'");
}

template <typename T>
bool ModelParams<T>::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.name == name; });
}

template <typename T>
void ModelParams<T>::zero_grad() {
  for (auto& e : entries_) e.tensor.zero_grad();
}

template <typename T>
void ModelParams<T>::reset_head(Rng& rng) {
  for (auto& e : entries_) {
    if (e.group != ParamGroup::kHead) continue;
    auto v = e.tensor.mutable_data();
    if (e.tensor.rank() == 2) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(e.tensor.dim(0)));
      for (auto& x : v) x = static_cast<T>(rng.uniform(-bound, bound));
    } else {
      std::fill(v.begin(), v.end(), T(0));
    }
  }
}

template <typename T>
template <typename U>
ModelParams<U> ModelParams<T>::cast() const {
  ModelParams<U> out;
  for (const auto& e : entries_) {
    std::vector<U> v(e.tensor.data().begin(), e.tensor.data().end());
    out.add(e.name, e.group, e.layer, Tensor<U>(e.tensor.shape(), std::move(v), e.tensor.requires_grad()));
  }
  return out;
}

template <typename T>
ModelParams<T> ModelParams<T>::clone() const {
  ModelParams out;
  for (const auto& e : entries_) out.add(e.name, e.group, e.layer, e.tensor.clone());
  return out;
}

template <typename T>
Tensor<T> positional_table(std::size_t num_patches, std::size_t embed_dim) {
  std::vector<T> v(num_patches * embed_dim);
  for (std::size_t p = 0; p < num_patches; ++p) {
    for (std::size_t i = 0; i < embed_dim; ++i) {
      const double pair = static_cast<double>(i / 2 * 2);
      const double angle =
          static_cast<double>(p) / std::pow(10000.0, pair / static_cast<double>(embed_dim));
      v[p * embed_dim + i] = static_cast<T>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return Tensor<T>({num_patches, embed_dim}, std::move(v));
}

template <typename T>
RaMat<T>::RaMat(ModelConfig config, ModelParams<T> params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  positions_ = positional_table<T>(config_.num_patches(), config_.embed_dim);
}

template <typename T>
Tensor<T> RaMat<T>::reservoir_states(const Reservoir& reservoir, const PatchSequence& seq,
                                     bool apply_mask) const {
  const std::vector<T> patches(seq.patches.begin(), seq.patches.end());
  const bool zero = apply_mask && reservoir.config().zero_masked_input;
  auto states = reservoir.run<T>(patches, seq.num_patches, {}, zero ? &seq.mask : nullptr);
  return Tensor<T>({seq.num_patches, reservoir.size()}, std::move(states));
}

template <typename T>
Tensor<T> RaMat<T>::embed(Tape<T>& tape, const Tensor<T>& states,
                          const std::vector<bool>* mask) const {
  if (states.rank() != 2 || states.dim(0) != config_.num_patches()) {
    throw dimension_error("reservoir states " + shape_str(states.shape()) + " for " +
                          std::to_string(config_.num_patches()) + " patches");
  }
  auto x = ops::add_bias(tape, ops::matmul(tape, states, params_.get("embed.weight")),
                         params_.get("embed.bias"));
  if (mask) x = ops::replace_rows(tape, x, *mask, params_.get("mask_token"));
  return ops::add(tape, x, positions_);
}

template <typename T>
Tensor<T> RaMat<T>::encode(Tape<T>& tape, const Tensor<T>& tokens, EncodeTrace<T>* trace) const {
  validate_finite(tokens, "encoder input");
  const std::size_t e = config_.embed_dim;
  const std::size_t heads = config_.num_heads;
  const std::size_t dh = e / heads;
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(dh));
  const T eps = static_cast<T>(config_.layer_norm_eps);
  Tensor<T> x = tokens;
  for (std::size_t l = 0; l < config_.num_layers; ++l) {
    const std::string pre = "blocks." + std::to_string(l) + ".";
    auto p = [&](const char* n) -> const Tensor<T>& { return params_.get(pre + n); };
    auto linear = [&](const Tensor<T>& in, const char* w, const char* b) {
      return ops::add_bias(tape, ops::matmul(tape, in, p(w)), p(b));
    };

    const auto h = ops::layer_norm(tape, x, p("ln1.gamma"), p("ln1.beta"), eps);
    const auto q = linear(h, "attn.wq", "attn.bq");
    const auto k = linear(h, "attn.wk", "attn.bk");
    const auto v = linear(h, "attn.wv", "attn.bv");
    std::vector<Tensor<T>> head_out;
    for (std::size_t hd = 0; hd < heads; ++hd) {
      const auto qh = ops::slice_cols(tape, q, hd * dh, dh);
      const auto kh = ops::slice_cols(tape, k, hd * dh, dh);
      const auto vh = ops::slice_cols(tape, v, hd * dh, dh);
      const auto scores = ops::scale(tape, ops::matmul(tape, qh, ops::transpose(tape, kh)), inv_sqrt);
      const auto weights = ops::softmax_lastdim(tape, scores);
      if (trace) trace->attention.push_back(weights);
      head_out.push_back(ops::matmul(tape, weights, vh));
    }
    const auto attn = linear(ops::concat_cols(tape, head_out), "attn.wo", "attn.bo");
    x = ops::add(tape, x, attn);

    const auto h2 = ops::layer_norm(tape, x, p("ln2.gamma"), p("ln2.beta"), eps);
    const auto ff = linear(ops::gelu(tape, linear(h2, "ffn.w1", "ffn.b1")), "ffn.w2", "ffn.b2");
    x = ops::add(tape, x, ff);
    for (T value : x.data()) {
      if (!std::isfinite(value))
        throw numeric_error("non-finite activation after encoder layer " + std::to_string(l));
    }
  }
  return x;
}

template <typename T>
Tensor<T> RaMat<T>::decode_masked(Tape<T>& tape, const Tensor<T>& contextual,
                                  const std::vector<bool>& mask) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) rows.push_back(i);
  if (rows.empty()) throw contract_error("decode_masked needs at least one masked position");
  const auto picked = ops::gather_rows(tape, contextual, rows);
  return ops::add_bias(tape, ops::matmul(tape, picked, params_.get("decoder.weight")),
                       params_.get("decoder.bias"));
}

template <typename T>
Tensor<T> RaMat<T>::masked_mse(Tape<T>& tape, const Tensor<T>& reconstruction,
                               const PatchSequence& seq) const {
  const auto idx = seq.masked_indices();
  std::vector<T> target;
  target.reserve(idx.size() * seq.patch_dim);
  for (std::size_t i : idx) {
    const auto patch = seq.patch(i);
    target.insert(target.end(), patch.begin(), patch.end());
  }
  if (idx.empty() || reconstruction.numel() != target.size()) {
    throw dimension_error("reconstruction " + shape_str(reconstruction.shape()) + " for " +
                          std::to_string(idx.size()) + " masked patches of width " +
                          std::to_string(seq.patch_dim));
  }
  const Tensor<T> target_t({idx.size(), seq.patch_dim}, std::move(target));
  return ops::mse(tape, reconstruction, target_t);
}

template <typename T>
Tensor<T> RaMat<T>::pretrain_loss(Tape<T>& tape, const Reservoir& reservoir,
                                  const PatchSequence& seq) const {
  const auto states = reservoir_states(reservoir, seq, true);
  const auto tokens = embed(tape, states, &seq.mask);
  const auto contextual = encode(tape, tokens);
  const auto recon = decode_masked(tape, contextual, seq.mask);
  return masked_mse(tape, recon, seq);
}

template <typename T>
Tensor<T> RaMat<T>::pooled(Tape<T>& tape, const Tensor<T>& states) const {
  return ops::mean_rows(tape, encode(tape, embed(tape, states, nullptr)));
}

template <typename T>
Tensor<T> RaMat<T>::head_logits(Tape<T>& tape, const Tensor<T>& states) const {
  return ops::add_bias(tape, ops::matmul(tape, pooled(tape, states), params_.get("head.weight")),
                       params_.get("head.bias"));
}

template <typename T>
std::vector<T> RaMat<T>::forward_head(const Reservoir& reservoir, std::span<const float> window) const {
  Tape<T> tape(Tape<T>::Mode::kNoGrad);
  const auto seq = patchify(config_, window);
  auto out = head_logits(tape, reservoir_states(reservoir, seq, false));
  if (config_.head == HeadKind::kClassification) out = ops::softmax_lastdim(tape, out);
  return out.values();
}

template class ModelParams<float>;
template class ModelParams<double>;
template ModelParams<double> ModelParams<float>::cast<double>() const;
template ModelParams<float> ModelParams<double>::cast<float>() const;
template ModelParams<float> ModelParams<float>::cast<float>() const;
template Tensor<float> positional_table<float>(std::size_t, std::size_t);
template Tensor<double> positional_table<double>(std::size_t, std::size_t);
template class RaMat<float>;
template class RaMat<double>;

}  // namespace ramat
