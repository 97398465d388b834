#ifndef RAMAT_TENSOR_HPP
#define RAMAT_TENSOR_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ramat/error.hpp"

namespace ramat {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

// Dense row-major tensor with an optional gradient buffer. Copies share
// storage: a Tensor is a handle, which is what lets the tape refer back to
// operands after the forward pass. Values are fixed once built, except
// through mutable_data(), which exists for optimizers and checkpoint loading.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const std::size_t n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<T>(n, T(0)), requires_grad);
  }
  static Tensor scalar(T value) { return Tensor({1}, {value}); }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t i) const { return impl_->shape.at(i); }
  std::size_t numel() const { return impl_->data.size(); }
  std::size_t rows() const { return impl_->shape.front(); }
  std::size_t cols() const { return impl_->shape.back(); }

  std::span<const T> data() const { return impl_->data; }
  std::span<T> mutable_data() { return impl_->data; }
  const std::vector<T>& values() const { return impl_->data; }
  T item() const;
  T at(std::size_t r, std::size_t c) const { return impl_->data[r * cols() + c]; }

  bool requires_grad() const { return impl_->requires_grad; }
  // The gradient buffer is writable through any handle; backward closures
  // hold const copies of their operands.
  std::span<T> grad() const { return impl_->grad; }
  void zero_grad();
  /// Turning tracking off drops the grad buffer; turning it on allocates a zeroed one.
  void set_requires_grad(bool on);

  /// Deep copy of values; the copy has its own (zeroed) grad buffer.
  Tensor clone() const;

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  struct Impl {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
};

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data, bool requires_grad)
    : impl_(std::make_shared<Impl>()) {
  if (shape.empty()) throw dimension_error("tensor needs at least one dimension");
  for (std::size_t d : shape) {
    if (d == 0) throw dimension_error("zero-sized dimension in " + shape_str(shape));
  }
  if (shape_numel(shape) != data.size()) {
    throw dimension_error("shape " + shape_str(shape) + " does not match " +
                          std::to_string(data.size()) + " values");
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
  if (requires_grad) impl_->grad.assign(impl_->data.size(), T(0));
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw contract_error("item() on tensor of shape " + shape_str(shape()));
  return impl_->data[0];
}

template <typename T>
void Tensor<T>::zero_grad() {
  std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
}

template <typename T>
void Tensor<T>::set_requires_grad(bool on) {
  if (on == impl_->requires_grad) return;
  impl_->requires_grad = on;
  if (on) {
    impl_->grad.assign(impl_->data.size(), T(0));
  } else {
    impl_->grad.clear();
    impl_->grad.shrink_to_fit();
  }
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  return Tensor(impl_->shape, impl_->data, impl_->requires_grad);
}

/// Throws a numeric error naming `what` if any value is NaN or infinite.
template <typename T>
void validate_finite(const Tensor<T>& t, std::string_view what) {
  const auto values = t.data();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw numeric_error("non-finite value in " + std::string(what) + " at index " +
                          std::to_string(i));
    }
  }
}

// Ordered record of backward closures for one forward pass. backward() replays
// them in reverse exactly once; a second call is rejected.
template <typename T>
class Tape {
 public:
  enum class Mode { kRecord, kNoGrad };

  explicit Tape(Mode mode = Mode::kRecord) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return mode_ == Mode::kRecord && !consumed_; }
  std::size_t size() const { return ops_.size(); }
  void record(std::function<void()> backward_fn) { ops_.push_back(std::move(backward_fn)); }

  void backward(Tensor<T> loss) {
    if (mode_ != Mode::kRecord) throw contract_error("backward on a no-grad tape");
    if (consumed_) throw contract_error("backward called twice on the same tape");
    if (loss.numel() != 1) {
      throw contract_error("backward needs a scalar loss, got " + shape_str(loss.shape()));
    }
    consumed_ = true;
    if (!loss.requires_grad()) return;
    loss.grad()[0] += T(1);
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
    ops_.clear();
  }

 private:
  Mode mode_;
  bool consumed_ = false;
  std::vector<std::function<void()>> ops_;
};

}  // namespace ramat

#endif  // RAMAT_TENSOR_HPP
