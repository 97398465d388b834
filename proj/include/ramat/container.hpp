#ifndef RAMAT_CONTAINER_HPP
#define RAMAT_CONTAINER_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "ramat/pipeline.hpp"
#include "ramat/tensor.hpp"
#include "ramat/train.hpp"

namespace ramat {

// Binary container shared by checkpoints and datasets:
//   8-byte magic | u64 LE metadata length | JSON metadata | payload
// The metadata carries a "manifest" of {name, dtype, shape, offset, bytes};
// arrays are stored back to back in manifest order as little-endian f32 or
// i64, offsets relative to the payload start.
struct ContainerArray {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> f32;
  std::vector<std::int64_t> i64;
  bool is_i64 = false;

  std::size_t count() const { return is_i64 ? i64.size() : f32.size(); }
};

struct Container {
  std::string magic;
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<ContainerArray> arrays;

  void add(std::string name, std::vector<std::size_t> shape, std::vector<float> values);
  void add_i64(std::string name, std::vector<std::size_t> shape, std::vector<std::int64_t> values);
  const ContainerArray& get(const std::string& name) const;
  bool contains(const std::string& name) const;
};

inline constexpr char kCheckpointMagic[] = "RAMATCK1";
inline constexpr char kDatasetMagic[] = "RAMATDS1";

void write_container(std::ostream& out, const Container& c);
Container read_container(std::istream& in, const std::string& expected_magic);
void write_container_file(const std::string& path, const Container& c);
Container read_container_file(const std::string& path, const std::string& expected_magic);

nlohmann::json scalers_to_json(const Scalers& scalers);
Scalers scalers_from_json(const nlohmann::json& j);

/// Checkpoint: reservoir, parameters, scalers, rng state, optional optimizer
/// state and the echoed run configuration.
Container checkpoint_container(const ModelState& state, const nlohmann::json& config_echo);
ModelState state_from_container(const Container& c);

void save_checkpoint(const std::string& path, const ModelState& state,
                     const nlohmann::json& config_echo);
ModelState load_checkpoint(const std::string& path, nlohmann::json* config_echo = nullptr);

// Preprocessed data: the filtered frame (for pretraining segments), the
// sequence dataset in original units, and scalers fitted on it.
struct DatasetFile {
  KpiFrame frame;
  SequenceDataset dataset;
  Scalers scalers;
  std::int64_t t_step_ms = 0;
  nlohmann::json summary = nlohmann::json::object();
};

void save_dataset(const std::string& path, const DatasetFile& file);
DatasetFile load_dataset(const std::string& path);

}  // namespace ramat

#endif  // RAMAT_CONTAINER_HPP
