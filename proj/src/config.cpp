#include "ramat/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "ramat/error.hpp"

namespace ramat {

using nlohmann::json;

namespace {

// Reads keys from one JSON object and rejects whatever is left over.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw config_error("'" + path_ + "' must be an object");
  }

  template <typename V>
  void read(const char* key, V& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<V>();
    } catch (const json::exception&) {
      throw config_error("bad value for '" + path_ + "." + key + "'");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  const json& at(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }
  void mark(const char* key) { seen_.insert(key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key())) throw config_error("unknown key '" + path_ + "." + it.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

KpiSchema schema_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "oran") return KpiSchema::oran_default();
    throw config_error("unknown schema preset '" + j.get<std::string>() + "'");
  }
  if (!j.is_array()) throw config_error("'data.schema' must be \"oran\" or a list of channels");
  KpiSchema s;
  for (const auto& c : j) {
    Section sec(c, "data.schema[]");
    ChannelSpec spec;
    std::string kind = "continuous";
    std::optional<float> impute;
    sec.read("name", spec.name);
    sec.read("unit", spec.unit);
    sec.read("kind", kind);
    sec.read("min", spec.range_min);
    sec.read("max", spec.range_max);
    sec.mark("impute");
    if (c.contains("impute") && !c.at("impute").is_null()) impute = c.at("impute").get<float>();
    sec.finish();
    spec.kind = channel_kind_from_string(kind);
    spec.impute_missing = impute;
    s.channels.push_back(std::move(spec));
  }
  return s;
}

json schema_to_json(const KpiSchema& s) {
  json out = json::array();
  for (const auto& c : s.channels) {
    out.push_back({{"name", c.name},
                   {"unit", c.unit},
                   {"kind", to_string(c.kind)},
                   {"min", c.range_min},
                   {"max", c.range_max},
                   {"impute", c.impute_missing ? json(*c.impute_missing) : json(nullptr)}});
  }
  return out;
}

json adamw_json(const AdamWConfig& a) {
  return {{"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps}, {"weight_decay", a.weight_decay}};
}

void read_adamw(Section& s, AdamWConfig& a) {
  s.read("beta1", a.beta1);
  s.read("beta2", a.beta2);
  s.read("eps", a.eps);
  s.read("weight_decay", a.weight_decay);
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  Section root(j, "config");
  root.read("seed", c.seed);

  bool n_seq_given = false;
  if (root.has("data")) {
    Section d(root.at("data"), "data");
    auto& p = c.data.preprocess;
    d.read("window_ms", p.window_ms);
    d.read("step_ms", p.step_ms);
    n_seq_given = d.has("n_seq");
    d.read("n_seq", p.n_seq);
    d.read("t_step_ms", p.t_step_ms);
    d.read("csv", c.data.csv);
    if (d.has("schema") && d.has("channels"))
      throw config_error("give either 'data.schema' or 'data.channels', not both");
    if (d.has("schema")) c.data.schema = schema_from_json(d.at("schema"));
    if (d.has("channels")) {
      std::vector<std::string> names;
      d.read("channels", names);
      c.data.schema = KpiSchema::generic(names);
    }
    d.finish();
  }

  bool channels_given = false;
  if (root.has("model")) {
    Section m(root.at("model"), "model");
    auto& mc = c.model;
    m.read("window_length", mc.window_length);
    m.read("patch_length", mc.patch_length);
    channels_given = m.has("channels");
    m.read("channels", mc.channels);
    m.read("mask_ratio", mc.mask_ratio);
    m.read("embed_dim", mc.embed_dim);
    m.read("num_layers", mc.num_layers);
    m.read("num_heads", mc.num_heads);
    m.read("ffn_dim", mc.ffn_dim);
    std::string head = to_string(mc.head);
    m.read("head", head);
    mc.head = head_kind_from_string(head);
    m.read("num_classes", mc.num_classes);
    m.read("layer_norm_eps", mc.layer_norm_eps);
    m.finish();
  }
  if (channels_given && c.model.channels != c.data.schema.size()) {
    throw config_error("model.channels = " + std::to_string(c.model.channels) + " but the schema has " +
                       std::to_string(c.data.schema.size()) + " channels");
  }
  c.model.channels = c.data.schema.size();
  if (!n_seq_given) c.data.preprocess.n_seq = c.model.window_length;

  if (root.has("reservoir")) {
    Section r(root.at("reservoir"), "reservoir");
    auto& rc = c.reservoir;
    r.read("size", rc.size);
    r.read("spectral_radius", rc.spectral_radius);
    r.read("leak_rate", rc.leak_rate);
    r.read("input_scale", rc.input_scale);
    r.read("sparsity", rc.sparsity);
    r.read("zero_masked_reservoir_input", rc.zero_masked_input);
    r.finish();
  }

  if (root.has("train")) {
    Section t(root.at("train"), "train");
    if (t.has("pretrain")) {
      Section p(t.at("pretrain"), "train.pretrain");
      auto& o = c.pretrain;
      p.read("epochs", o.epochs);
      p.read("batch_size", o.batch_size);
      p.read("stride", o.stride);
      p.read("warmup_steps", o.warmup_steps);
      p.read("max_steps", o.max_steps);
      p.read("lr_peak", o.lr_peak);
      p.read("lr_min", o.lr_min);
      p.read("max_norm", o.max_norm);
      read_adamw(p, o.adamw);
      p.finish();
    }
    if (t.has("finetune")) {
      Section f(t.at("finetune"), "train.finetune");
      auto& o = c.finetune;
      f.read("epochs", o.epochs);
      f.read("batch_size", o.batch_size);
      f.read("lr", o.lr);
      f.read("layer_decay", o.layer_decay);
      std::string freeze = to_string(o.freeze.mode);
      f.read("freeze", freeze);
      o.freeze.mode = freeze_mode_from_string(freeze);
      f.read("top_k", o.freeze.top_k);
      f.read("patience", o.patience);
      f.read("val_fraction", o.val_fraction);
      f.read("max_norm", o.max_norm);
      read_adamw(f, o.adamw);
      f.finish();
    }
    t.finish();
  }
  root.finish();
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw config_error("'" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

json RunConfig::to_json() const {
  const auto& p = data.preprocess;
  json pre = {{"epochs", pretrain.epochs},
              {"batch_size", pretrain.batch_size},
              {"stride", pretrain.stride},
              {"warmup_steps", pretrain.warmup_steps},
              {"max_steps", pretrain.max_steps},
              {"lr_peak", pretrain.lr_peak},
              {"lr_min", pretrain.lr_min},
              {"max_norm", pretrain.max_norm}};
  pre.update(adamw_json(pretrain.adamw));
  json fine = {{"epochs", finetune.epochs},
               {"batch_size", finetune.batch_size},
               {"lr", finetune.lr},
               {"layer_decay", finetune.layer_decay},
               {"freeze", to_string(finetune.freeze.mode)},
               {"top_k", finetune.freeze.top_k},
               {"patience", finetune.patience},
               {"val_fraction", finetune.val_fraction},
               {"max_norm", finetune.max_norm}};
  fine.update(adamw_json(finetune.adamw));
  return {
      {"seed", seed},
      {"data",
       {{"csv", data.csv},
        {"window_ms", p.window_ms},
        {"step_ms", p.step_ms},
        {"n_seq", p.n_seq},
        {"t_step_ms", p.t_step_ms},
        {"schema", schema_to_json(data.schema)}}},
      {"model",
       {{"window_length", model.window_length},
        {"patch_length", model.patch_length},
        {"channels", model.channels},
        {"mask_ratio", model.mask_ratio},
        {"embed_dim", model.embed_dim},
        {"num_layers", model.num_layers},
        {"num_heads", model.num_heads},
        {"ffn_dim", model.ffn_dim},
        {"head", to_string(model.head)},
        {"num_classes", model.num_classes},
        {"layer_norm_eps", model.layer_norm_eps}}},
      {"reservoir",
       {{"size", reservoir.size},
        {"spectral_radius", reservoir.spectral_radius},
        {"leak_rate", reservoir.leak_rate},
        {"input_scale", reservoir.input_scale},
        {"sparsity", reservoir.sparsity},
        {"zero_masked_reservoir_input", reservoir.zero_masked_input}}},
      {"train", {{"pretrain", pre}, {"finetune", fine}}},
  };
}

void RunConfig::validate() const {
  data.schema.validate();
  model.validate();
  reservoir.validate();
  const auto& p = data.preprocess;
  if (p.window_ms <= 0 || p.step_ms <= 0 || p.t_step_ms <= 0)
    throw config_error("data window_ms, step_ms and t_step_ms must be positive");
  if (p.n_seq < 1) throw config_error("data.n_seq must be >= 1");
  if (pretrain.batch_size == 0 || finetune.batch_size == 0) throw config_error("batch_size must be >= 1");
  if (!(pretrain.max_norm > 0.0) || !(finetune.max_norm > 0.0)) throw config_error("max_norm must be > 0");
  if (!(finetune.layer_decay > 0.0 && finetune.layer_decay <= 1.0))
    throw config_error("finetune.layer_decay must be in (0, 1]");
  if (finetune.freeze.mode == FreezeMode::kTopKBlocks && finetune.freeze.top_k > model.num_layers)
    throw config_error("finetune.top_k exceeds model.num_layers");
}

std::uint64_t resolve_seed(const RunConfig& config, std::optional<std::uint64_t> flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("RAMAT_SEED"); env && *env) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (*end != '\0') throw config_error(std::string("RAMAT_SEED is not an integer: '") + env + "'");
    return v;
  }
  return config.seed;
}

}  // namespace ramat
