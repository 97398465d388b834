#include "ramat/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace ramat {

GradCheckResult check_gradients(const NamedTensors& params,
                                const std::function<Tensor<double>(Tape<double>&)>& loss_fn,
                                double h, double floor) {
  for (const auto& [name, t] : params) {
    if (!t.requires_grad()) throw contract_error("gradcheck: " + name + " does not require grad");
    Tensor<double>(t).zero_grad();
  }
  {
    Tape<double> tape;
    tape.backward(loss_fn(tape));
  }

  auto evaluate = [&loss_fn]() {
    Tape<double> tape(Tape<double>::Mode::kNoGrad);
    return loss_fn(tape).item();
  };

  GradCheckResult result;
  for (const auto& [name, param] : params) {
    Tensor<double> p = param;
    auto values = p.mutable_data();
    const auto grads = p.grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = evaluate();
      values[i] = saved - h;
      const double down = evaluate();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = grads[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++result.checked;
      if (rel > result.max_rel_error || result.checked == 1) {
        result.max_rel_error = rel;
        result.worst_name = name;
        result.worst_index = i;
        result.worst_autodiff = analytic;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace ramat
