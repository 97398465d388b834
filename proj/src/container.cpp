#include "ramat/container.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "ramat/error.hpp"

namespace ramat {

using nlohmann::json;

namespace {

template <typename V>
void put_le(std::ostream& out, V value) {
  unsigned char bytes[sizeof(V)];
  std::memcpy(bytes, &value, sizeof(V));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(V));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(V));
}

template <typename V>
V get_le(const unsigned char* bytes) {
  unsigned char tmp[sizeof(V)];
  std::memcpy(tmp, bytes, sizeof(V));
  if constexpr (std::endian::native == std::endian::big) std::reverse(tmp, tmp + sizeof(V));
  V value;
  std::memcpy(&value, tmp, sizeof(V));
  return value;
}

std::size_t product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

}  // namespace

void Container::add(std::string name, std::vector<std::size_t> shape, std::vector<float> values) {
  if (product(shape) != values.size()) throw dimension_error("container array '" + name + "' shape mismatch");
  arrays.push_back({std::move(name), std::move(shape), std::move(values), {}, false});
}

void Container::add_i64(std::string name, std::vector<std::size_t> shape,
                        std::vector<std::int64_t> values) {
  if (product(shape) != values.size()) throw dimension_error("container array '" + name + "' shape mismatch");
  arrays.push_back({std::move(name), std::move(shape), {}, std::move(values), true});
}

const ContainerArray& Container::get(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return a;
  throw data_error("container has no array '" + name + "'");
}

bool Container::contains(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return true;
  return false;
}

void write_container(std::ostream& out, const Container& c) {
  if (c.magic.size() != 8) throw contract_error("container magic must be 8 bytes");
  json meta = c.metadata;
  json manifest = json::array();
  std::uint64_t offset = 0;
  for (const auto& a : c.arrays) {
    const std::uint64_t bytes = a.count() * (a.is_i64 ? 8 : 4);
    manifest.push_back({{"name", a.name},
                        {"dtype", a.is_i64 ? "i64" : "f32"},
                        {"shape", a.shape},
                        {"offset", offset},
                        {"bytes", bytes}});
    offset += bytes;
  }
  meta["manifest"] = manifest;
  const std::string text = meta.dump();
  out.write(c.magic.data(), 8);
  put_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& a : c.arrays) {
    if (a.is_i64) {
      for (auto v : a.i64) put_le(out, v);
    } else {
      for (auto v : a.f32) put_le(out, v);
    }
  }
  if (!out) throw data_error("write failed");
}

Container read_container(std::istream& in, const std::string& expected_magic) {
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16) throw data_error("container truncated");
  Container c;
  c.magic = bytes.substr(0, 8);
  if (c.magic != expected_magic) {
    throw data_error("bad magic '" + c.magic + "', expected '" + expected_magic + "'");
  }
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  const auto meta_len = get_le<std::uint64_t>(raw + 8);
  if (meta_len > bytes.size() - 16) throw data_error("container metadata truncated");
  try {
    c.metadata = json::parse(bytes.substr(16, meta_len));
  } catch (const json::exception& e) {
    throw data_error(std::string("container metadata is not valid JSON: ") + e.what());
  }
  const std::size_t payload = 16 + meta_len;
  const std::size_t payload_size = bytes.size() - payload;
  std::uint64_t expected_offset = 0;
  for (const auto& entry : c.metadata.at("manifest")) {
    ContainerArray a;
    a.name = entry.at("name").get<std::string>();
    a.shape = entry.at("shape").get<std::vector<std::size_t>>();
    a.is_i64 = entry.at("dtype").get<std::string>() == "i64";
    const auto offset = entry.at("offset").get<std::uint64_t>();
    const auto size = entry.at("bytes").get<std::uint64_t>();
    const std::size_t n = product(a.shape);
    const std::size_t width = a.is_i64 ? 8 : 4;
    if (offset != expected_offset || size != n * width || offset + size > payload_size) {
      throw data_error("manifest entry '" + a.name + "' has inconsistent offset or size");
    }
    expected_offset += size;
    const unsigned char* p = raw + payload + offset;
    if (a.is_i64) {
      a.i64.resize(n);
      for (std::size_t i = 0; i < n; ++i) a.i64[i] = get_le<std::int64_t>(p + i * 8);
    } else {
      a.f32.resize(n);
      for (std::size_t i = 0; i < n; ++i) a.f32[i] = get_le<float>(p + i * 4);
    }
    c.arrays.push_back(std::move(a));
  }
  if (expected_offset != payload_size) throw data_error("manifest does not cover the payload exactly");
  c.metadata.erase("manifest");
  return c;
}

void write_container_file(const std::string& path, const Container& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write '" + path + "'");
  write_container(out, c);
}

Container read_container_file(const std::string& path, const std::string& expected_magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open '" + path + "'");
  return read_container(in, expected_magic);
}

json scalers_to_json(const Scalers& scalers) {
  json out = json::array();
  for (const auto& s : scalers)
    out.push_back({{"channel", s.channel}, {"mean", s.mean}, {"std", s.std}, {"clamped", s.clamped}});
  return out;
}

Scalers scalers_from_json(const json& j) {
  Scalers out;
  for (const auto& e : j) {
    out.push_back({e.at("channel").get<std::string>(), e.at("mean").get<double>(),
                   e.at("std").get<double>(), e.at("clamped").get<bool>()});
  }
  return out;
}

namespace {

json model_config_json(const ModelConfig& m) {
  return {{"window_length", m.window_length}, {"patch_length", m.patch_length},
          {"channels", m.channels},           {"mask_ratio", m.mask_ratio},
          {"embed_dim", m.embed_dim},         {"num_layers", m.num_layers},
          {"num_heads", m.num_heads},         {"ffn_dim", m.ffn_dim},
          {"head", to_string(m.head)},        {"num_classes", m.num_classes},
          {"layer_norm_eps", m.layer_norm_eps}};
}

ModelConfig model_config_from(const json& j) {
  ModelConfig m;
  m.window_length = j.at("window_length");
  m.patch_length = j.at("patch_length");
  m.channels = j.at("channels");
  m.mask_ratio = j.at("mask_ratio");
  m.embed_dim = j.at("embed_dim");
  m.num_layers = j.at("num_layers");
  m.num_heads = j.at("num_heads");
  m.ffn_dim = j.at("ffn_dim");
  m.head = head_kind_from_string(j.at("head"));
  m.num_classes = j.at("num_classes");
  m.layer_norm_eps = j.at("layer_norm_eps");
  return m;
}

json reservoir_config_json(const ReservoirConfig& r) {
  return {{"size", r.size},
          {"spectral_radius", r.spectral_radius},
          {"leak_rate", r.leak_rate},
          {"input_scale", r.input_scale},
          {"sparsity", r.sparsity},
          {"zero_masked_reservoir_input", r.zero_masked_input}};
}

ReservoirConfig reservoir_config_from(const json& j) {
  ReservoirConfig r;
  r.size = j.at("size");
  r.spectral_radius = j.at("spectral_radius");
  r.leak_rate = j.at("leak_rate");
  r.input_scale = j.at("input_scale");
  r.sparsity = j.at("sparsity");
  r.zero_masked_input = j.at("zero_masked_reservoir_input");
  return r;
}

ParamGroup group_from_string(const std::string& s) {
  if (s == "embed") return ParamGroup::kEmbed;
  if (s == "mask_token") return ParamGroup::kMaskToken;
  if (s == "block") return ParamGroup::kBlock;
  if (s == "decoder") return ParamGroup::kDecoder;
  if (s == "head") return ParamGroup::kHead;
  throw data_error("unknown parameter group '" + s + "'");
}

std::string group_name(ParamGroup g) {
  switch (g) {
    case ParamGroup::kEmbed:
      return "embed";
    case ParamGroup::kMaskToken:
      return "mask_token";
    case ParamGroup::kBlock:
      return "block";
    case ParamGroup::kDecoder:
      return "decoder";
    case ParamGroup::kHead:
      return "head";
  }
  return "?";
}

}  // namespace

Container checkpoint_container(const ModelState& state, const json& config_echo) {
  Container c;
  c.magic = kCheckpointMagic;
  c.metadata["format_version"] = 1;
  c.metadata["config"] = config_echo;
  c.metadata["model"] = model_config_json(state.model);
  c.metadata["reservoir"] = {{"config", reservoir_config_json(state.reservoir.config())},
                             {"input_dim", state.reservoir.input_dim()},
                             {"seed", state.reservoir.seed()}};
  c.metadata["scalers"] = scalers_to_json(state.scalers);
  c.metadata["rng_state"] = state.rng.save_state();
  c.metadata["step"] = state.step;

  const auto& res = state.reservoir;
  c.add("reservoir.w_in", {res.size(), res.input_dim()}, {res.w_in().begin(), res.w_in().end()});
  c.add("reservoir.w_res", {res.size(), res.size()}, {res.w_res().begin(), res.w_res().end()});
  json params = json::array();
  for (const auto& e : state.params.entries()) {
    params.push_back({{"name", e.name}, {"group", group_name(e.group)}, {"layer", e.layer}});
    c.add("param." + e.name, e.tensor.shape(), e.tensor.values());
  }
  c.metadata["params"] = params;
  if (state.optimizer) {
    const auto& o = *state.optimizer;
    c.metadata["optimizer"] = {{"beta1", o.hyper.beta1}, {"beta2", o.hyper.beta2},
                               {"eps", o.hyper.eps},     {"weight_decay", o.hyper.weight_decay},
                               {"step", o.step}};
    for (const auto& [name, buf] : o.moments) {
      c.add("optim.m." + name, {buf.m.size()}, buf.m);
      c.add("optim.v." + name, {buf.v.size()}, buf.v);
    }
  } else {
    c.metadata["optimizer"] = nullptr;
  }
  return c;
}

ModelState state_from_container(const Container& c) {
  try {
    ModelState st;
    const auto& meta = c.metadata;
    st.model = model_config_from(meta.at("model"));
    st.model.validate();
    const auto& rj = meta.at("reservoir");
    const auto rcfg = reservoir_config_from(rj.at("config"));
    const auto& w_in = c.get("reservoir.w_in");
    const auto& w_res = c.get("reservoir.w_res");
    st.reservoir = Reservoir(rcfg, rj.at("input_dim").get<std::size_t>(),
                             rj.at("seed").get<std::uint64_t>(), w_in.f32, w_res.f32);
    if (st.reservoir.input_dim() != st.model.patch_dim())
      throw config_error("reservoir input dimension does not match patch dimension");
    // Shapes are checked against a freshly laid-out parameter set so a
    // manifest that disagrees with the model config is reported by name.
    Rng layout_rng(0);
    const auto layout = ModelParams<float>::init(st.model, rcfg.size, layout_rng);
    for (const auto& p : meta.at("params")) {
      const std::string name = p.at("name");
      const auto& arr = c.get("param." + name);
      if (!layout.contains(name)) throw config_error("checkpoint parameter '" + name + "' unknown to the model");
      if (layout.get(name).shape() != arr.shape) {
        throw config_error("parameter '" + name + "' has shape " + shape_str(arr.shape) +
                           " but the config needs " + shape_str(layout.get(name).shape()));
      }
      st.params.add(name, group_from_string(p.at("group")), p.at("layer").get<int>(),
                    Tensor<float>(arr.shape, arr.f32, true));
    }
    for (const auto& e : layout.entries())
      if (!st.params.contains(e.name)) throw config_error("checkpoint lacks parameter '" + e.name + "'");
    st.scalers = scalers_from_json(meta.at("scalers"));
    st.rng.load_state(meta.at("rng_state").get<std::string>());
    st.step = meta.at("step").get<std::uint64_t>();
    if (!meta.at("optimizer").is_null()) {
      const auto& o = meta.at("optimizer");
      OptimizerState os;
      os.hyper = {o.at("beta1"), o.at("beta2"), o.at("eps"), o.at("weight_decay")};
      os.step = o.at("step");
      for (const auto& a : c.arrays) {
        if (a.name.rfind("optim.m.", 0) == 0) {
          const std::string name = a.name.substr(8);
          os.moments[name] = {a.f32, c.get("optim.v." + name).f32};
        }
      }
      st.optimizer = std::move(os);
    }
    return st;
  } catch (const json::exception& e) {
    throw data_error(std::string("malformed checkpoint metadata: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const ModelState& state, const json& config_echo) {
  write_container_file(path, checkpoint_container(state, config_echo));
}

ModelState load_checkpoint(const std::string& path, json* config_echo) {
  const auto c = read_container_file(path, kCheckpointMagic);
  if (config_echo) *config_echo = c.metadata.value("config", json::object());
  return state_from_container(c);
}

void save_dataset(const std::string& path, const DatasetFile& file) {
  Container c;
  c.magic = kDatasetMagic;
  const auto& ds = file.dataset;
  const std::size_t k = ds.channels();
  c.metadata = {{"format_version", 1},
                {"channels", ds.names},
                {"n_seq", ds.n_seq},
                {"t_step_ms", file.t_step_ms},
                {"scalers", scalers_to_json(file.scalers)},
                {"summary", file.summary}};
  std::vector<float> values;
  values.reserve(file.frame.cells.size());
  for (const auto& v : file.frame.cells) {
    if (!v) throw data_error("dataset frame contains missing cells");
    values.push_back(*v);
  }
  c.add("frame.values", {file.frame.rows(), k}, std::move(values));
  c.add_i64("frame.timestamps", {file.frame.rows()}, file.frame.timestamps);
  c.add("X", {ds.size(), ds.n_seq, k}, ds.x);
  c.add("y", {ds.size(), k}, ds.y);
  std::vector<std::int64_t> rows(ds.target_rows.begin(), ds.target_rows.end());
  c.add_i64("target_rows", {ds.size()}, std::move(rows));
  c.add_i64("target_timestamps", {ds.size()}, ds.target_timestamps);
  write_container_file(path, c);
}

DatasetFile load_dataset(const std::string& path) {
  const auto c = read_container_file(path, kDatasetMagic);
  try {
    DatasetFile f;
    const auto& meta = c.metadata;
    const auto names = meta.at("channels").get<std::vector<std::string>>();
    f.t_step_ms = meta.at("t_step_ms");
    f.scalers = scalers_from_json(meta.at("scalers"));
    f.summary = meta.value("summary", json::object());
    f.frame.names = names;
    f.frame.timestamps = c.get("frame.timestamps").i64;
    for (float v : c.get("frame.values").f32) f.frame.cells.emplace_back(v);
    f.frame.validate();
    auto& ds = f.dataset;
    ds.names = names;
    ds.n_seq = meta.at("n_seq");
    ds.x = c.get("X").f32;
    ds.y = c.get("y").f32;
    for (auto r : c.get("target_rows").i64) ds.target_rows.push_back(static_cast<std::size_t>(r));
    ds.target_timestamps = c.get("target_timestamps").i64;
    if (ds.x.size() != ds.size() * ds.n_seq * names.size() || ds.y.size() != ds.size() * names.size())
      throw data_error("dataset arrays do not agree on M");
    return f;
  } catch (const json::exception& e) {
    throw data_error(std::string("malformed dataset metadata: ") + e.what());
  }
}

}  // namespace ramat
