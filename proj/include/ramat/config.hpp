#ifndef RAMAT_CONFIG_HPP
#define RAMAT_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ramat/model.hpp"
#include "ramat/pipeline.hpp"
#include "ramat/reservoir.hpp"
#include "ramat/train.hpp"

namespace ramat {

struct DataConfig {
  std::vector<std::string> csv;  ///< raw inputs, used when --in is not given
  KpiSchema schema = KpiSchema::oran_default();
  PreprocessOptions preprocess;  ///< n_seq follows model.window_length unless set
};

// The whole run in one JSON document:
//   {"seed", "data", "model", "reservoir", "train": {"pretrain", "finetune"}}
// Parsing is strict: unknown keys are a config error. Every default is
// materialised by to_json(), so the echo reproduces the run.
struct RunConfig {
  std::uint64_t seed = 0;
  DataConfig data;
  ModelConfig model;
  ReservoirConfig reservoir;
  PretrainOptions pretrain;
  FinetuneOptions finetune;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::string& path);
  nlohmann::json to_json() const;
  void validate() const;
};

/// Seed precedence: explicit flag, then RAMAT_SEED, then the config value.
std::uint64_t resolve_seed(const RunConfig& config, std::optional<std::uint64_t> flag);

}  // namespace ramat

#endif  // RAMAT_CONFIG_HPP
