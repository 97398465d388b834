#include "ramat/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace ramat {

std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

}  // namespace ramat

namespace ramat::ops {
namespace {

template <typename T>
bool tracks(const Tape<T>& tape, std::initializer_list<const Tensor<T>*> inputs) {
  if (!tape.recording()) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor<T>* t) { return t->requires_grad(); });
}

template <typename T>
void require_2d(const Tensor<T>& x, const char* op) {
  if (x.rank() != 2) {
    throw dimension_error(std::string(op) + " expects a 2-D tensor, got " + shape_str(x.shape()));
  }
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw dimension_error(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                          shape_str(b.shape()) + " differ");
  }
}

// Plain triple loop in i-k-j order; fixed summation order keeps results
// bit-reproducible.
template <typename T>
void gemm_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[i * k + p];
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
T gelu_value(T x) {
  return T(0.5) * x * (T(1) + std::erf(x / std::numbers::sqrt2_v<T>));
}

template <typename T>
T gelu_derivative(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x / std::numbers::sqrt2_v<T>));
  const T pdf = std::exp(T(-0.5) * x * x) / std::sqrt(T(2) * std::numbers::pi_v<T>);
  return cdf + x * pdf;
}

}  // namespace

template <typename T>
Tensor<T> matmul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw dimension_error("matmul: inner dimensions of " + shape_str(a.shape()) + " and " +
                          shape_str(b.shape()) + " disagree");
  }
  std::vector<T> out(m * n, T(0));
  gemm_acc(a.data().data(), b.data().data(), out.data(), m, k, n);
  const bool grad = tracks(tape, {&a, &b});
  Tensor<T> y({m, n}, std::move(out), grad);
  if (grad) {
    tape.record([a, b, y, m, k, n]() mutable {
      const auto g = y.grad();
      if (a.requires_grad()) {
        // dA = G·Bᵀ
        auto ga = a.grad();
        const auto bv = b.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            T acc = T(0);
            for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * bv[p * n + j];
            ga[i * k + p] += acc;
          }
      }
      if (b.requires_grad()) {
        // dB = Aᵀ·G
        auto gb = b.grad();
        const auto av = a.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const T s = av[i * k + p];
            for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += s * g[i * n + j];
          }
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> transpose(Tape<T>& tape, const Tensor<T>& x) {
  require_2d(x, "transpose");
  const std::size_t m = x.dim(0), n = x.dim(1);
  std::vector<T> out(m * n);
  const auto xv = x.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = xv[i * n + j];
  const bool grad = tracks(tape, {&x});
  Tensor<T> y({n, m}, std::move(out), grad);
  if (grad) {
    tape.record([x, y, m, n]() mutable {
      const auto g = y.grad();
      auto gx = x.grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += g[j * m + i];
    });
  }
  return y;
}

template <typename T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  const bool grad = tracks(tape, {&a, &b});
  Tensor<T> y(a.shape(), std::move(out), grad);
  if (grad) {
    tape.record([a, b, y]() mutable {
      const auto g = y.grad();
      if (a.requires_grad())
        for (std::size_t i = 0; i < g.size(); ++i) a.grad()[i] += g[i];
      if (b.requires_grad())
        for (std::size_t i = 0; i < g.size(); ++i) b.grad()[i] += g[i];
    });
  }
  return y;
}

template <typename T>
Tensor<T> sub(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  const bool grad = tracks(tape, {&a, &b});
  Tensor<T> y(a.shape(), std::move(out), grad);
  if (grad) {
    tape.record([a, b, y]() mutable {
      const auto g = y.grad();
      if (a.requires_grad())
        for (std::size_t i = 0; i < g.size(); ++i) a.grad()[i] += g[i];
      if (b.requires_grad())
        for (std::size_t i = 0; i < g.size(); ++i) b.grad()[i] -= g[i];
    });
  }
  return y;
}

template <typename T>
Tensor<T> mul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  const bool grad = tracks(tape, {&a, &b});
  Tensor<T> y(a.shape(), std::move(out), grad);
  if (grad) {
    tape.record([a, b, y]() mutable {
      const auto g = y.grad();
      if (a.requires_grad())
        for (std::size_t i = 0; i < g.size(); ++i) a.grad()[i] += g[i] * b.data()[i];
      if (b.requires_grad())
        for (std::size_t i = 0; i < g.size(); ++i) b.grad()[i] += g[i] * a.data()[i];
    });
  }
  return y;
}

template <typename T>
Tensor<T> scale(Tape<T>& tape, const Tensor<T>& x, T factor) {
  std::vector<T> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * factor;
  const bool grad = tracks(tape, {&x});
  Tensor<T> y(x.shape(), std::move(out), grad);
  if (grad) {
    tape.record([x, y, factor]() mutable {
      const auto g = y.grad();
      for (std::size_t i = 0; i < g.size(); ++i) x.grad()[i] += g[i] * factor;
    });
  }
  return y;
}

template <typename T>
Tensor<T> neg(Tape<T>& tape, const Tensor<T>& x) {
  return scale(tape, x, T(-1));
}

template <typename T>
Tensor<T> add_bias(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& bias) {
  require_2d(x, "add_bias");
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (bias.numel() != n) {
    throw dimension_error("add_bias: bias " + shape_str(bias.shape()) + " does not match rows of " +
                          shape_str(x.shape()));
  }
  std::vector<T> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x.data()[i * n + j] + bias.data()[j];
  const bool grad = tracks(tape, {&x, &bias});
  Tensor<T> y({m, n}, std::move(out), grad);
  if (grad) {
    tape.record([x, bias, y, m, n]() mutable {
      const auto g = y.grad();
      if (x.requires_grad())
        for (std::size_t i = 0; i < g.size(); ++i) x.grad()[i] += g[i];
      if (bias.requires_grad())
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) bias.grad()[j] += g[i * n + j];
    });
  }
  return y;
}

template <typename T>
Tensor<T> tanh(Tape<T>& tape, const Tensor<T>& x) {
  std::vector<T> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x.data()[i]);
  const bool grad = tracks(tape, {&x});
  Tensor<T> y(x.shape(), std::move(out), grad);
  if (grad) {
    tape.record([x, y]() mutable {
      const auto g = y.grad();
      const auto yv = y.data();
      for (std::size_t i = 0; i < g.size(); ++i) x.grad()[i] += g[i] * (T(1) - yv[i] * yv[i]);
    });
  }
  return y;
}

template <typename T>
Tensor<T> gelu(Tape<T>& tape, const Tensor<T>& x) {
  std::vector<T> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gelu_value(x.data()[i]);
  const bool grad = tracks(tape, {&x});
  Tensor<T> y(x.shape(), std::move(out), grad);
  if (grad) {
    tape.record([x, y]() mutable {
      const auto g = y.grad();
      for (std::size_t i = 0; i < g.size(); ++i) x.grad()[i] += g[i] * gelu_derivative(x.data()[i]);
    });
  }
  return y;
}

template <typename T>
Tensor<T> softmax_lastdim(Tape<T>& tape, const Tensor<T>& x) {
  const std::size_t n = x.cols();
  const std::size_t m = x.numel() / n;
  std::vector<T> out(x.numel());
  const auto xv = x.data();
  for (std::size_t r = 0; r < m; ++r) {
    const T* in = xv.data() + r * n;
    T* o = out.data() + r * n;
    const T mx = *std::max_element(in, in + n);
    T total = T(0);
    for (std::size_t j = 0; j < n; ++j) {
      o[j] = std::exp(in[j] - mx);
      total += o[j];
    }
    for (std::size_t j = 0; j < n; ++j) o[j] /= total;
  }
  const bool grad = tracks(tape, {&x});
  Tensor<T> y(x.shape(), std::move(out), grad);
  if (grad) {
    tape.record([x, y, m, n]() mutable {
      const auto g = y.grad();
      const auto yv = y.data();
      auto gx = x.grad();
      for (std::size_t r = 0; r < m; ++r) {
        T dot = T(0);
        for (std::size_t j = 0; j < n; ++j) dot += g[r * n + j] * yv[r * n + j];
        for (std::size_t j = 0; j < n; ++j) gx[r * n + j] += yv[r * n + j] * (g[r * n + j] - dot);
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> layer_norm(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, T eps) {
  const std::size_t n = x.cols();
  if (n < 2) throw dimension_error("layer_norm: normalized dimension must be >= 2");
  if (gamma.numel() != n || beta.numel() != n) {
    throw dimension_error("layer_norm: gamma " + shape_str(gamma.shape()) + " / beta " +
                          shape_str(beta.shape()) + " do not match last dimension of " +
                          shape_str(x.shape()));
  }
  const std::size_t m = x.numel() / n;
  std::vector<T> out(x.numel());
  std::vector<T> xhat(x.numel());
  std::vector<T> inv_std(m);
  const auto xv = x.data();
  for (std::size_t r = 0; r < m; ++r) {
    const T* in = xv.data() + r * n;
    T mean = T(0);
    for (std::size_t j = 0; j < n; ++j) mean += in[j];
    mean /= T(n);
    T var = T(0);
    for (std::size_t j = 0; j < n; ++j) var += (in[j] - mean) * (in[j] - mean);
    var /= T(n);
    inv_std[r] = T(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[r * n + j] = (in[j] - mean) * inv_std[r];
      out[r * n + j] = xhat[r * n + j] * gamma.data()[j] + beta.data()[j];
    }
  }
  const bool grad = tracks(tape, {&x, &gamma, &beta});
  Tensor<T> y(x.shape(), std::move(out), grad);
  if (grad) {
    tape.record([x, gamma, beta, y, xhat = std::move(xhat), inv_std = std::move(inv_std), m,
                 n]() mutable {
      const auto g = y.grad();
      for (std::size_t r = 0; r < m; ++r) {
        const T* xh = xhat.data() + r * n;
        const T* gr = g.data() + r * n;
        if (gamma.requires_grad())
          for (std::size_t j = 0; j < n; ++j) gamma.grad()[j] += gr[j] * xh[j];
        if (beta.requires_grad())
          for (std::size_t j = 0; j < n; ++j) beta.grad()[j] += gr[j];
        if (x.requires_grad()) {
          T sum_g = T(0), sum_gx = T(0);
          for (std::size_t j = 0; j < n; ++j) {
            const T gh = gr[j] * gamma.data()[j];
            sum_g += gh;
            sum_gx += gh * xh[j];
          }
          auto gx = x.grad();
          for (std::size_t j = 0; j < n; ++j) {
            const T gh = gr[j] * gamma.data()[j];
            gx[r * n + j] += inv_std[r] * (gh - sum_g / T(n) - xh[j] * sum_gx / T(n));
          }
        }
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> slice_cols(Tape<T>& tape, const Tensor<T>& x, std::size_t start, std::size_t count) {
  require_2d(x, "slice_cols");
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (count == 0 || start + count > n) {
    throw dimension_error("slice_cols: columns [" + std::to_string(start) + ", " +
                          std::to_string(start + count) + ") outside " + shape_str(x.shape()));
  }
  std::vector<T> out(m * count);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < count; ++j) out[i * count + j] = x.data()[i * n + start + j];
  const bool grad = tracks(tape, {&x});
  Tensor<T> y({m, count}, std::move(out), grad);
  if (grad) {
    tape.record([x, y, m, n, start, count]() mutable {
      const auto g = y.grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < count; ++j) x.grad()[i * n + start + j] += g[i * count + j];
    });
  }
  return y;
}

template <typename T>
Tensor<T> concat_cols(Tape<T>& tape, const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw dimension_error("concat_cols: no inputs");
  const std::size_t m = parts.front().dim(0);
  std::size_t total = 0;
  bool any_grad = false;
  for (const auto& p : parts) {
    require_2d(p, "concat_cols");
    if (p.dim(0) != m) {
      throw dimension_error("concat_cols: row count " + shape_str(p.shape()) + " vs " +
                            shape_str(parts.front().shape()));
    }
    total += p.dim(1);
    any_grad = any_grad || p.requires_grad();
  }
  std::vector<T> out(m * total);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.dim(1);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) out[i * total + offset + j] = p.data()[i * w + j];
    offset += w;
  }
  const bool grad = tape.recording() && any_grad;
  Tensor<T> y({m, total}, std::move(out), grad);
  if (grad) {
    tape.record([parts, y, m, total]() mutable {
      const auto g = y.grad();
      std::size_t off = 0;
      for (auto& p : parts) {
        const std::size_t w = p.dim(1);
        if (p.requires_grad())
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < w; ++j) p.grad()[i * w + j] += g[i * total + off + j];
        off += w;
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> gather_rows(Tape<T>& tape, const Tensor<T>& x, const std::vector<std::size_t>& rows) {
  require_2d(x, "gather_rows");
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (rows.empty()) throw dimension_error("gather_rows: empty row list");
  std::vector<T> out(rows.size() * n);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= m) {
      throw dimension_error("gather_rows: row " + std::to_string(rows[r]) + " outside " +
                            shape_str(x.shape()));
    }
    std::copy_n(x.data().data() + rows[r] * n, n, out.data() + r * n);
  }
  const bool grad = tracks(tape, {&x});
  Tensor<T> y({rows.size(), n}, std::move(out), grad);
  if (grad) {
    tape.record([x, y, rows, n]() mutable {
      const auto g = y.grad();
      for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t j = 0; j < n; ++j) x.grad()[rows[r] * n + j] += g[r * n + j];
    });
  }
  return y;
}

template <typename T>
Tensor<T> replace_rows(Tape<T>& tape, const Tensor<T>& x, const std::vector<bool>& mask,
                       const Tensor<T>& row) {
  require_2d(x, "replace_rows");
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (mask.size() != m) {
    throw dimension_error("replace_rows: mask of length " + std::to_string(mask.size()) +
                          " for " + shape_str(x.shape()));
  }
  if (row.numel() != n) {
    throw dimension_error("replace_rows: row " + shape_str(row.shape()) + " vs " +
                          shape_str(x.shape()));
  }
  std::vector<T> out(x.values());
  for (std::size_t i = 0; i < m; ++i)
    if (mask[i]) std::copy_n(row.data().data(), n, out.data() + i * n);
  const bool grad = tracks(tape, {&x, &row});
  Tensor<T> y({m, n}, std::move(out), grad);
  if (grad) {
    tape.record([x, row, y, mask, m, n]() mutable {
      const auto g = y.grad();
      for (std::size_t i = 0; i < m; ++i) {
        if (mask[i]) {
          if (row.requires_grad())
            for (std::size_t j = 0; j < n; ++j) row.grad()[j] += g[i * n + j];
        } else if (x.requires_grad()) {
          for (std::size_t j = 0; j < n; ++j) x.grad()[i * n + j] += g[i * n + j];
        }
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> mean_rows(Tape<T>& tape, const Tensor<T>& x) {
  require_2d(x, "mean_rows");
  const std::size_t m = x.dim(0), n = x.dim(1);
  std::vector<T> out(n, T(0));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += x.data()[i * n + j];
  for (auto& v : out) v /= T(m);
  const bool grad = tracks(tape, {&x});
  Tensor<T> y({1, n}, std::move(out), grad);
  if (grad) {
    tape.record([x, y, m, n]() mutable {
      const auto g = y.grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) x.grad()[i * n + j] += g[j] / T(m);
    });
  }
  return y;
}

template <typename T>
Tensor<T> sum(Tape<T>& tape, const Tensor<T>& x) {
  T total = T(0);
  for (T v : x.data()) total += v;
  const bool grad = tracks(tape, {&x});
  Tensor<T> y({1}, {total}, grad);
  if (grad) {
    tape.record([x, y]() mutable {
      const T g = y.grad()[0];
      for (auto& gx : x.grad()) gx += g;
    });
  }
  return y;
}

template <typename T>
Tensor<T> mse(Tape<T>& tape, const Tensor<T>& prediction, const Tensor<T>& target) {
  require_same_shape(prediction, target, "mse");
  const std::size_t n = prediction.numel();
  T total = T(0);
  for (std::size_t i = 0; i < n; ++i) {
    const T d = prediction.data()[i] - target.data()[i];
    total += d * d;
  }
  const bool grad = tracks(tape, {&prediction, &target});
  Tensor<T> y({1}, {total / T(n)}, grad);
  if (grad) {
    tape.record([prediction, target, y, n]() mutable {
      const T g = y.grad()[0] * T(2) / T(n);
      for (std::size_t i = 0; i < n; ++i) {
        const T d = prediction.data()[i] - target.data()[i];
        if (prediction.requires_grad()) prediction.grad()[i] += g * d;
        if (target.requires_grad()) target.grad()[i] -= g * d;
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> cross_entropy(Tape<T>& tape, const Tensor<T>& logits, std::size_t label) {
  const std::size_t c = logits.numel();
  if (label >= c) {
    throw dimension_error("cross_entropy: label " + std::to_string(label) + " with " +
                          std::to_string(c) + " classes");
  }
  const auto lv = logits.data();
  const T mx = *std::max_element(lv.begin(), lv.end());
  T total = T(0);
  for (T v : lv) total += std::exp(v - mx);
  const T log_z = mx + std::log(total);
  const bool grad = tracks(tape, {&logits});
  Tensor<T> y({1}, {log_z - lv[label]}, grad);
  if (grad) {
    tape.record([logits, y, label, log_z, c]() mutable {
      const T g = y.grad()[0];
      for (std::size_t j = 0; j < c; ++j) {
        const T p = std::exp(logits.data()[j] - log_z);
        logits.grad()[j] += g * (p - (j == label ? T(1) : T(0)));
      }
    });
  }
  return y;
}

#define RAMAT_INSTANTIATE_OPS(T)                                                               \
  template Tensor<T> matmul(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                     \
  template Tensor<T> transpose(Tape<T>&, const Tensor<T>&);                                    \
  template Tensor<T> add(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> sub(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> mul(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> scale(Tape<T>&, const Tensor<T>&, T);                                     \
  template Tensor<T> neg(Tape<T>&, const Tensor<T>&);                                          \
  template Tensor<T> add_bias(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                   \
  template Tensor<T> tanh(Tape<T>&, const Tensor<T>&);                                         \
  template Tensor<T> gelu(Tape<T>&, const Tensor<T>&);                                         \
  template Tensor<T> softmax_lastdim(Tape<T>&, const Tensor<T>&);                              \
  template Tensor<T> layer_norm(Tape<T>&, const Tensor<T>&, const Tensor<T>&,                  \
                                const Tensor<T>&, T);                                          \
  template Tensor<T> slice_cols(Tape<T>&, const Tensor<T>&, std::size_t, std::size_t);         \
  template Tensor<T> concat_cols(Tape<T>&, const std::vector<Tensor<T>>&);                     \
  template Tensor<T> gather_rows(Tape<T>&, const Tensor<T>&, const std::vector<std::size_t>&); \
  template Tensor<T> replace_rows(Tape<T>&, const Tensor<T>&, const std::vector<bool>&,        \
                                  const Tensor<T>&);                                           \
  template Tensor<T> mean_rows(Tape<T>&, const Tensor<T>&);                                    \
  template Tensor<T> sum(Tape<T>&, const Tensor<T>&);                                          \
  template Tensor<T> mse(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> cross_entropy(Tape<T>&, const Tensor<T>&, std::size_t);

RAMAT_INSTANTIATE_OPS(float)
RAMAT_INSTANTIATE_OPS(double)

#undef RAMAT_INSTANTIATE_OPS

}  // namespace ramat::ops
