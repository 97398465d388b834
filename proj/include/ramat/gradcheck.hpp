#ifndef RAMAT_GRADCHECK_HPP
#define RAMAT_GRADCHECK_HPP

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ramat/tensor.hpp"

namespace ramat {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_name;
  std::size_t worst_index = 0;
  double worst_autodiff = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

using NamedTensors = std::vector<std::pair<std::string, Tensor<double>>>;

// Compares reverse-mode gradients of `loss_fn` against central differences
// f(w+h) - f(w-h) / 2h for every element of every tensor in `params`.
// Relative error is |g_ad - g_fd| / max(|g_ad|, |g_fd|, floor).
GradCheckResult check_gradients(const NamedTensors& params,
                                const std::function<Tensor<double>(Tape<double>&)>& loss_fn,
                                double h = 1e-3, double floor = 1e-8);

}  // namespace ramat

#endif  // RAMAT_GRADCHECK_HPP
