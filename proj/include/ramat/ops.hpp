#ifndef RAMAT_OPS_HPP
#define RAMAT_OPS_HPP

#include <cstddef>
#include <vector>

#include "ramat/tensor.hpp"

// Differentiable kernels. Every op records its backward closure on the tape
// when the tape is recording and at least one operand requires a gradient.
// There is no implicit broadcasting: bias addition and scalar scaling are
// their own ops.
namespace ramat::ops {

template <typename T>
Tensor<T> matmul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> transpose(Tape<T>& tape, const Tensor<T>& x);

template <typename T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> sub(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> mul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(Tape<T>& tape, const Tensor<T>& x, T factor);

template <typename T>
Tensor<T> neg(Tape<T>& tape, const Tensor<T>& x);

/// x[m×n] + bias[n] added to every row.
template <typename T>
Tensor<T> add_bias(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& bias);

template <typename T>
Tensor<T> tanh(Tape<T>& tape, const Tensor<T>& x);

/// Exact GELU: 0.5·x·(1 + erf(x/√2)).
template <typename T>
Tensor<T> gelu(Tape<T>& tape, const Tensor<T>& x);

template <typename T>
Tensor<T> softmax_lastdim(Tape<T>& tape, const Tensor<T>& x);

template <typename T>
Tensor<T> layer_norm(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, T eps);

/// Columns [start, start+count) of a 2-D tensor.
template <typename T>
Tensor<T> slice_cols(Tape<T>& tape, const Tensor<T>& x, std::size_t start, std::size_t count);

template <typename T>
Tensor<T> concat_cols(Tape<T>& tape, const std::vector<Tensor<T>>& parts);

template <typename T>
Tensor<T> gather_rows(Tape<T>& tape, const Tensor<T>& x, const std::vector<std::size_t>& rows);

/// Rows i with mask[i] set are replaced by `row` (shape [n]).
template <typename T>
Tensor<T> replace_rows(Tape<T>& tape, const Tensor<T>& x, const std::vector<bool>& mask,
                       const Tensor<T>& row);

/// Mean over the row axis: [m×n] -> [1×n].
template <typename T>
Tensor<T> mean_rows(Tape<T>& tape, const Tensor<T>& x);

template <typename T>
Tensor<T> sum(Tape<T>& tape, const Tensor<T>& x);

/// Mean squared difference over all elements; scalar result.
template <typename T>
Tensor<T> mse(Tape<T>& tape, const Tensor<T>& prediction, const Tensor<T>& target);

/// -log softmax(logits)[label] for a single row of logits.
template <typename T>
Tensor<T> cross_entropy(Tape<T>& tape, const Tensor<T>& logits, std::size_t label);

}  // namespace ramat::ops

#endif  // RAMAT_OPS_HPP
