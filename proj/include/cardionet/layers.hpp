#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "cardionet/ops.hpp"
#include "cardionet/rng.hpp"

namespace cardionet {

enum class Mode { Train, Eval };

template <typename T>
struct DenseParams {
  Tensor<T> W;  // in x out
  Tensor<T> b;  // out
  ops::Activation activation = ops::Activation::None;

  std::size_t in_dim() const { return W.dim(0); }
  std::size_t out_dim() const { return W.dim(1); }
  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out);
};

template <typename T>
struct ConvParams {
  Tensor<T> kernel;  // kh x kw x cin x cout
  Tensor<T> bias;    // cout
  std::size_t stride = 1;

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out);
};

/// Parallel 1x1, 3x3 and 5x5 same-padded convolutions, each followed by
/// tanh, stacked along channels in that order.
template <typename T>
struct InceptionBlockParams {
  ConvParams<T> branch1, branch3, branch5;

  std::size_t in_channels() const { return branch1.kernel.dim(2); }
  std::size_t out_channels() const {
    return branch1.kernel.dim(3) + branch3.kernel.dim(3) + branch5.kernel.dim(3);
  }
  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out);
};

/// Gate weights act on the concatenation [x_t; h_prev].
template <typename T>
struct LstmCellParams {
  Tensor<T> W_i, W_f, W_o, W_g;  // (input_dim + hidden_dim) x hidden_dim
  Tensor<T> b_i, b_f, b_o, b_g;  // hidden_dim

  std::size_t hidden_dim() const { return W_i.dim(1); }
  std::size_t input_dim() const { return W_i.dim(0) - W_i.dim(1); }
  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out);
};

template <typename T>
struct BiLstmParams {
  LstmCellParams<T> forward_cell, backward_cell;

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out);
};

template <typename T>
struct SelfAttentionParams {
  DenseParams<T> query, key, value;
  std::size_t attention_width = 256;
  bool scale_scores = true;

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out);
};

struct DropoutSpec {
  double rate = 0.5;
  Mode mode = Mode::Train;
};

// Initialization: Glorot-uniform weights drawn from `rng`, zero biases
// (forget gate bias 1).
template <typename T>
DenseParams<T> init_dense(std::size_t in, std::size_t out, ops::Activation act, Rng rng);
template <typename T>
ConvParams<T> init_conv(std::size_t k, std::size_t cin, std::size_t cout, std::size_t stride, Rng rng);
template <typename T>
InceptionBlockParams<T> init_inception(std::size_t cin, std::size_t c1, std::size_t c3, std::size_t c5, const Rng& rng);
template <typename T>
LstmCellParams<T> init_lstm_cell(std::size_t input_dim, std::size_t hidden_dim, const Rng& rng);
template <typename T>
BiLstmParams<T> init_bilstm(std::size_t input_dim, std::size_t hidden_dim, const Rng& rng);
template <typename T>
SelfAttentionParams<T> init_self_attention(std::size_t model_dim, std::size_t attention_dim, std::size_t width,
                                           const Rng& rng);

template <typename T>
Var<T> dense_forward(DenseParams<T>& p, Var<T> x);
template <typename T>
Var<T> conv_forward(ConvParams<T>& p, Var<T> x);
template <typename T>
Var<T> inception_block_forward(InceptionBlockParams<T>& p, Var<T> x);

template <typename T>
struct LstmState {
  Var<T> h, c;
};

/// One step on 1 x input_dim input with 1 x hidden_dim state.
template <typename T>
LstmState<T> lstm_cell_step(LstmCellParams<T>& p, Var<T> x_t, Var<T> h_prev, Var<T> c_prev);
/// Scans rows of `seq` (T x input_dim) from a zero state, forwards or in
/// reverse, returning the hidden state for each row in row order.
template <typename T>
std::vector<Var<T>> lstm_scan(LstmCellParams<T>& p, Var<T> seq, bool reverse);
/// T x input_dim -> T x 2*hidden; row t is [h_fwd(t); h_bwd(t)].
template <typename T>
Var<T> bilstm_forward(BiLstmParams<T>& p, Var<T> seq);

template <typename T>
struct AttentionOutput {
  Var<T> context;  // T x attention_dim
  Var<T> weights;  // T x T, rows sum to 1
};

/// Sigmoid-scored self-attention restricted to |t - u| <= width / 2, with
/// scores normalized per row.
template <typename T>
AttentionOutput<T> self_attention_forward(SelfAttentionParams<T>& p, Var<T> seq);

/// Band mask with 1 where |t - u| * 2 <= width.
template <typename T>
Tensor<T> attention_band_mask(std::size_t length, std::size_t width);

/// Inverted dropout: in train mode multiplies by a mask in {0, 1/(1-rate)}
/// drawn from `rng`; eval mode and rate 0 return `x` unchanged.
template <typename T>
Var<T> dropout_forward(Var<T> x, const DropoutSpec& spec, Rng rng);

}  // namespace cardionet
