#ifndef RAMAT_TEST_SUPPORT_HPP
#define RAMAT_TEST_SUPPORT_HPP

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ramat/rng.hpp"
#include "ramat/tensor.hpp"

namespace ramat::testing {

template <typename T>
inline std::vector<T> normal_values(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(rng.normal());
  return v;
}

template <typename T>
inline Tensor<T> normal_tensor(Shape shape, std::uint64_t seed, bool requires_grad = false) {
  return Tensor<T>(shape, normal_values<T>(shape_numel(shape), seed), requires_grad);
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("ramat_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace ramat::testing

#endif  // RAMAT_TEST_SUPPORT_HPP
