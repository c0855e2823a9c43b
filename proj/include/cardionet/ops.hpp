#pragma once

#include <cstddef>
#include <vector>

#include "cardionet/kernels.hpp"
#include "cardionet/tape.hpp"

// Differentiable primitives. Each op validates shapes, computes its output
// with the kernels in kernels.hpp, and records a backward rule on the tape of
// its inputs. Images are H x W x C, sequences T x D, vectors 1 x D.

namespace cardionet::ops {

enum class Activation { None, Tanh, Sigmoid };

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b);
template <typename T>
Var<T> transpose(Var<T> x);

template <typename T>
Var<T> add(Var<T> a, Var<T> b);
/// x[..., n] + bias[n], broadcast over leading dims.
template <typename T>
Var<T> add_bias(Var<T> x, Var<T> bias);
template <typename T>
Var<T> mul(Var<T> a, Var<T> b);
template <typename T>
Var<T> scale(Var<T> x, T factor);
/// Elementwise product with a constant tensor (dropout masks, band masks).
template <typename T>
Var<T> mul_const(Var<T> x, const Tensor<T>& mask);

template <typename T>
Var<T> activation(Var<T> x, Activation kind);
template <typename T>
Var<T> tanh(Var<T> x) {
  return activation(x, Activation::Tanh);
}
template <typename T>
Var<T> sigmoid(Var<T> x) {
  return activation(x, Activation::Sigmoid);
}

/// Softmax over the last axis, stabilized by subtracting the row max.
template <typename T>
Var<T> softmax(Var<T> x);
/// Divides each row (last axis) by its sum. Inputs must be positive.
template <typename T>
Var<T> normalize_rows(Var<T> x);

/// Zero-padded cross-correlation. stride 1 keeps H x W; larger strides give
/// ceil(D / stride) with the padding split as evenly as possible.
template <typename T>
Var<T> conv2d_same(Var<T> input, Var<T> kernel, Var<T> bias, std::size_t stride = 1);
template <typename T>
Var<T> pool2d(Var<T> input, kernels::PoolKind kind, std::size_t window, std::size_t stride);

/// Concatenate along the last axis; all leading dims must agree.
template <typename T>
Var<T> concat_last(const std::vector<Var<T>>& inputs);
/// concat_last restricted to H x W x C feature maps.
template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& inputs);
template <typename T>
Var<T> slice_last(Var<T> x, std::size_t begin, std::size_t count);

template <typename T>
Var<T> reshape(Var<T> x, Shape shape);
/// Row t of a T x D matrix as 1 x D.
template <typename T>
Var<T> row(Var<T> x, std::size_t t);
/// Stack 1 x D rows into an N x D matrix.
template <typename T>
Var<T> stack_rows(const std::vector<Var<T>>& rows);
/// Mean over rows: T x D -> 1 x D.
template <typename T>
Var<T> mean_rows(Var<T> x);

template <typename T>
Var<T> sum(Var<T> x);
/// Sum of squares of all elements, as a scalar.
template <typename T>
Var<T> sum_squares(Var<T> x);
/// -log(max(probs[label], 1e-12)) for a 1 x K or K probability vector.
template <typename T>
Var<T> cross_entropy(Var<T> probs, std::size_t label);

}  // namespace cardionet::ops
