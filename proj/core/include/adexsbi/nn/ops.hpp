#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "adexsbi/common/rng.hpp"
#include "adexsbi/nn/graph.hpp"

// Differentiable ops over Graph nodes. Matrices are rank-2 [rows, cols];
// conv1d and gru_sequence take rank-3 [batch, channels, length] inputs.
namespace adexsbi::nn {

/// [n,k] x [k,m] -> [n,m]
Var matmul(Var a, Var b);

// Elementwise binary ops. `b` may equal `a` in shape, be a row vector
// ([m] or [1,m]) broadcast over the rows of a rank-2 `a`, or a single value.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);

Var scale(Var a, double factor);
Var add_scalar(Var a, double shift);
Var neg(Var a);

Var relu(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
Var softplus(Var a);
Var square(Var a);

/// Sum of all elements, shape [1].
Var sum(Var a);
/// Mean of all elements, shape [1].
Var mean(Var a);
/// Per-row sums of a rank-2 tensor, shape [n,1].
Var row_sum(Var a);

/// Columns [begin, end) of a rank-2 tensor.
Var slice_cols(Var a, std::size_t begin, std::size_t end);
/// Column-wise concatenation of rank-2 tensors with equal row counts.
Var concat_cols(std::span<const Var> parts);
/// out[:, j] = a[:, indices[j]]
Var gather_cols(Var a, std::span<const std::size_t> indices);
Var reshape(Var a, Shape shape);

/// Valid (unpadded) strided 1-D convolution.
/// x [B,C,L], weight [F,C,K], bias [F] -> [B,F,(L-K)/stride+1]
Var conv1d(Var x, Var weight, Var bias, std::size_t stride);
std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, std::size_t stride);

/// Inverted dropout. Identity when `training` is false or p == 0.
Var dropout(Var a, double p, Rng& rng, bool training);

/// Gated recurrent unit over a [B,C,L] sequence, returning the final hidden
/// state [B,H]. Gate order in the packed weights is (reset, update, new):
///   r = sigmoid(x W_ir + b_ir + h W_hr + b_hr)
///   u = sigmoid(x W_iu + b_iu + h W_hu + b_hu)
///   n = tanh(x W_in + b_in + r * (h W_hn + b_hn))
///   h' = (1 - u) * n + u * h
/// w_ih [C,3H], w_hh [H,3H], b_ih [3H], b_hh [3H]; h starts at zero.
Var gru_sequence(Var x, Var w_ih, Var w_hh, Var b_ih, Var b_hh);

}  // namespace adexsbi::nn
