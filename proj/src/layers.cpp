#include "cardionet/layers.hpp"

#include <cmath>

#include "cardionet/errors.hpp"

namespace cardionet {

namespace {

template <typename T>
Tensor<T> glorot(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Tensor<T> t(std::move(shape));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : t.values) v = static_cast<T>(rng.uniform(-limit, limit));
  return t;
}

}  // namespace

template <typename T>
void DenseParams<T>::collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
  out.push_back({prefix + "/W", &W, true});
  out.push_back({prefix + "/b", &b, false});
}

template <typename T>
void ConvParams<T>::collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
  out.push_back({prefix + "/kernel", &kernel, true});
  out.push_back({prefix + "/bias", &bias, false});
}

template <typename T>
void InceptionBlockParams<T>::collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
  branch1.collect(prefix + "/branch1", out);
  branch3.collect(prefix + "/branch3", out);
  branch5.collect(prefix + "/branch5", out);
}

template <typename T>
void LstmCellParams<T>::collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
  out.push_back({prefix + "/W_i", &W_i, true});
  out.push_back({prefix + "/W_f", &W_f, true});
  out.push_back({prefix + "/W_o", &W_o, true});
  out.push_back({prefix + "/W_g", &W_g, true});
  out.push_back({prefix + "/b_i", &b_i, false});
  out.push_back({prefix + "/b_f", &b_f, false});
  out.push_back({prefix + "/b_o", &b_o, false});
  out.push_back({prefix + "/b_g", &b_g, false});
}

template <typename T>
void BiLstmParams<T>::collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
  forward_cell.collect(prefix + "/forward", out);
  backward_cell.collect(prefix + "/backward", out);
}

template <typename T>
void SelfAttentionParams<T>::collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
  query.collect(prefix + "/query", out);
  key.collect(prefix + "/key", out);
  value.collect(prefix + "/value", out);
}

template <typename T>
DenseParams<T> init_dense(std::size_t in, std::size_t out, ops::Activation act, Rng rng) {
  DenseParams<T> p;
  p.W = glorot<T>(Shape{in, out}, in, out, rng);
  p.b = Tensor<T>(Shape{out});
  p.activation = act;
  return p;
}

template <typename T>
ConvParams<T> init_conv(std::size_t k, std::size_t cin, std::size_t cout, std::size_t stride, Rng rng) {
  if (k % 2 == 0) throw UnsupportedKernelError("convolution kernels must have odd size, got " + std::to_string(k));
  ConvParams<T> p;
  p.kernel = glorot<T>(Shape{k, k, cin, cout}, k * k * cin, k * k * cout, rng);
  p.bias = Tensor<T>(Shape{cout});
  p.stride = stride;
  return p;
}

template <typename T>
InceptionBlockParams<T> init_inception(std::size_t cin, std::size_t c1, std::size_t c3, std::size_t c5,
                                       const Rng& rng) {
  InceptionBlockParams<T> p;
  p.branch1 = init_conv<T>(1, cin, c1, 1, rng.substream("branch1"));
  p.branch3 = init_conv<T>(3, cin, c3, 1, rng.substream("branch3"));
  p.branch5 = init_conv<T>(5, cin, c5, 1, rng.substream("branch5"));
  return p;
}

template <typename T>
LstmCellParams<T> init_lstm_cell(std::size_t input_dim, std::size_t hidden_dim, const Rng& rng) {
  LstmCellParams<T> p;
  const std::size_t rows = input_dim + hidden_dim;
  auto gate = [&](const char* name) {
    Rng r = rng.substream(name);
    return glorot<T>(Shape{rows, hidden_dim}, rows, hidden_dim, r);
  };
  p.W_i = gate("W_i");
  p.W_f = gate("W_f");
  p.W_o = gate("W_o");
  p.W_g = gate("W_g");
  p.b_i = Tensor<T>(Shape{hidden_dim});
  p.b_f = Tensor<T>(Shape{hidden_dim}, T(1));
  p.b_o = Tensor<T>(Shape{hidden_dim});
  p.b_g = Tensor<T>(Shape{hidden_dim});
  return p;
}

template <typename T>
BiLstmParams<T> init_bilstm(std::size_t input_dim, std::size_t hidden_dim, const Rng& rng) {
  return {init_lstm_cell<T>(input_dim, hidden_dim, rng.substream("forward")),
          init_lstm_cell<T>(input_dim, hidden_dim, rng.substream("backward"))};
}

template <typename T>
SelfAttentionParams<T> init_self_attention(std::size_t model_dim, std::size_t attention_dim, std::size_t width,
                                           const Rng& rng) {
  if (width < 1) throw ConfigError("attention width must be >= 1");
  SelfAttentionParams<T> p;
  p.query = init_dense<T>(model_dim, attention_dim, ops::Activation::None, rng.substream("query"));
  p.key = init_dense<T>(model_dim, attention_dim, ops::Activation::None, rng.substream("key"));
  p.value = init_dense<T>(model_dim, attention_dim, ops::Activation::None, rng.substream("value"));
  p.attention_width = width;
  return p;
}

template <typename T>
Var<T> dense_forward(DenseParams<T>& p, Var<T> x) {
  Tape<T>& tape = *x.tape;
  if (x.shape().size() != 2 || x.shape()[1] != p.in_dim())
    throw DimensionError("dense: input " + shape_str(x.shape()) + " does not match weights " + shape_str(p.W.shape));
  Var<T> y = ops::add_bias(ops::matmul(x, tape.param(p.W)), tape.param(p.b));
  return ops::activation(y, p.activation);
}

template <typename T>
Var<T> conv_forward(ConvParams<T>& p, Var<T> x) {
  Tape<T>& tape = *x.tape;
  return ops::conv2d_same(x, tape.param(p.kernel), tape.param(p.bias), p.stride);
}

template <typename T>
Var<T> inception_block_forward(InceptionBlockParams<T>& p, Var<T> x) {
  if (x.shape().size() != 3 || x.shape()[2] != p.in_channels())
    throw DimensionError("inception block: input " + shape_str(x.shape()) + " but block expects " +
                         std::to_string(p.in_channels()) + " channels");
  return ops::concat_channels<T>({ops::tanh(conv_forward(p.branch1, x)), ops::tanh(conv_forward(p.branch3, x)),
                                  ops::tanh(conv_forward(p.branch5, x))});
}

template <typename T>
LstmState<T> lstm_cell_step(LstmCellParams<T>& p, Var<T> x_t, Var<T> h_prev, Var<T> c_prev) {
  const std::size_t hid = p.hidden_dim();
  if (x_t.numel() != p.input_dim() || h_prev.numel() != hid || c_prev.numel() != hid)
    throw DimensionError("lstm_cell_step: x " + shape_str(x_t.shape()) + ", h " + shape_str(h_prev.shape()) +
                         ", c " + shape_str(c_prev.shape()) + " vs input_dim " + std::to_string(p.input_dim()) +
                         ", hidden_dim " + std::to_string(hid));
  Tape<T>& tape = *x_t.tape;
  const Var<T> x = ops::reshape(x_t, Shape{1, p.input_dim()});
  const Var<T> z = ops::concat_last<T>({x, ops::reshape(h_prev, Shape{1, hid})});
  auto gate = [&](Tensor<T>& W, Tensor<T>& b) { return ops::add_bias(ops::matmul(z, tape.param(W)), tape.param(b)); };
  const Var<T> i = ops::sigmoid(gate(p.W_i, p.b_i));
  const Var<T> f = ops::sigmoid(gate(p.W_f, p.b_f));
  const Var<T> o = ops::sigmoid(gate(p.W_o, p.b_o));
  const Var<T> g = ops::tanh(gate(p.W_g, p.b_g));
  const Var<T> c = ops::add(ops::mul(f, ops::reshape(c_prev, Shape{1, hid})), ops::mul(i, g));
  const Var<T> h = ops::mul(o, ops::tanh(c));
  return {h, c};
}

template <typename T>
std::vector<Var<T>> lstm_scan(LstmCellParams<T>& p, Var<T> seq, bool reverse) {
  const Shape& s = seq.shape();
  if (s.size() != 2 || s[0] == 0) throw DimensionError("lstm: expected non-empty T x D sequence, got " + shape_str(s));
  Tape<T>& tape = *seq.tape;
  const std::size_t steps = s[0];
  const std::size_t hid = p.hidden_dim();
  LstmState<T> state{tape.constant(Tensor<T>(Shape{1, hid})), tape.constant(Tensor<T>(Shape{1, hid}))};
  std::vector<Var<T>> hs(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t t = reverse ? steps - 1 - k : k;
    state = lstm_cell_step(p, ops::row(seq, t), state.h, state.c);
    hs[t] = state.h;
  }
  return hs;
}

template <typename T>
Var<T> bilstm_forward(BiLstmParams<T>& p, Var<T> seq) {
  const auto fwd = lstm_scan(p.forward_cell, seq, false);
  const auto bwd = lstm_scan(p.backward_cell, seq, true);
  std::vector<Var<T>> rows;
  rows.reserve(fwd.size());
  for (std::size_t t = 0; t < fwd.size(); ++t) rows.push_back(ops::concat_last<T>({fwd[t], bwd[t]}));
  return ops::stack_rows(rows);
}

template <typename T>
Tensor<T> attention_band_mask(std::size_t length, std::size_t width) {
  Tensor<T> m(Shape{length, length});
  for (std::size_t t = 0; t < length; ++t)
    for (std::size_t u = 0; u < length; ++u) {
      const std::size_t d = t > u ? t - u : u - t;
      m.values[t * length + u] = 2 * d <= width ? T(1) : T(0);
    }
  return m;
}

template <typename T>
AttentionOutput<T> self_attention_forward(SelfAttentionParams<T>& p, Var<T> seq) {
  const Shape& s = seq.shape();
  if (s.size() != 2 || s[0] == 0) throw DimensionError("self_attention: expected T x D sequence, got " + shape_str(s));
  const std::size_t length = s[0];
  const Var<T> q = dense_forward(p.query, seq);
  const Var<T> k = dense_forward(p.key, seq);
  const Var<T> v = dense_forward(p.value, seq);
  Var<T> scores = ops::matmul(q, ops::transpose(k));
  if (p.scale_scores) scores = ops::scale(scores, T(1) / std::sqrt(static_cast<T>(p.key.out_dim())));
  Var<T> gated = ops::sigmoid(scores);
  if (2 * (length - 1) > p.attention_width) gated = ops::mul_const(gated, attention_band_mask<T>(length, p.attention_width));
  const Var<T> weights = ops::normalize_rows(gated);
  return {ops::matmul(weights, v), weights};
}

template <typename T>
Var<T> dropout_forward(Var<T> x, const DropoutSpec& spec, Rng rng) {
  if (!(spec.rate >= 0.0 && spec.rate < 1.0))
    throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(spec.rate));
  if (spec.mode == Mode::Eval || spec.rate == 0.0) return x;
  Tensor<T> mask(x.shape());
  const T keep = static_cast<T>(1.0 / (1.0 - spec.rate));
  for (auto& m : mask.values) m = rng.uniform() < spec.rate ? T(0) : keep;
  return ops::mul_const(x, mask);
}

#define CARDIONET_LAYERS(T)                                                                                    \
  template struct DenseParams<T>;                                                                              \
  template struct ConvParams<T>;                                                                               \
  template struct InceptionBlockParams<T>;                                                                     \
  template struct LstmCellParams<T>;                                                                           \
  template struct BiLstmParams<T>;                                                                             \
  template struct SelfAttentionParams<T>;                                                                      \
  template DenseParams<T> init_dense<T>(std::size_t, std::size_t, ops::Activation, Rng);                       \
  template ConvParams<T> init_conv<T>(std::size_t, std::size_t, std::size_t, std::size_t, Rng);                \
  template InceptionBlockParams<T> init_inception<T>(std::size_t, std::size_t, std::size_t, std::size_t,       \
                                                     const Rng&);                                              \
  template LstmCellParams<T> init_lstm_cell<T>(std::size_t, std::size_t, const Rng&);                          \
  template BiLstmParams<T> init_bilstm<T>(std::size_t, std::size_t, const Rng&);                               \
  template SelfAttentionParams<T> init_self_attention<T>(std::size_t, std::size_t, std::size_t, const Rng&);   \
  template Var<T> dense_forward<T>(DenseParams<T>&, Var<T>);                                                   \
  template Var<T> conv_forward<T>(ConvParams<T>&, Var<T>);                                                     \
  template Var<T> inception_block_forward<T>(InceptionBlockParams<T>&, Var<T>);                                \
  template LstmState<T> lstm_cell_step<T>(LstmCellParams<T>&, Var<T>, Var<T>, Var<T>);                         \
  template std::vector<Var<T>> lstm_scan<T>(LstmCellParams<T>&, Var<T>, bool);                                 \
  template Var<T> bilstm_forward<T>(BiLstmParams<T>&, Var<T>);                                                 \
  template Tensor<T> attention_band_mask<T>(std::size_t, std::size_t);                                         \
  template AttentionOutput<T> self_attention_forward<T>(SelfAttentionParams<T>&, Var<T>);                      \
  template Var<T> dropout_forward<T>(Var<T>, const DropoutSpec&, Rng);

CARDIONET_LAYERS(float)
CARDIONET_LAYERS(double)

#undef CARDIONET_LAYERS

}  // namespace cardionet
