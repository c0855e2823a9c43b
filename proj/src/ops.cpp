#include "cardionet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cardionet/errors.hpp"

namespace cardionet::ops {

namespace {

template <typename T>
Tape<T>& tape_of(Var<T> v) {
  if (!v.attached()) throw ContractError("op applied to a detached Var");
  return *v.tape;
}

template <typename T>
Tape<T>& tape_of(Var<T> a, Var<T> b) {
  Tape<T>& t = tape_of(a);
  if (b.tape != a.tape) throw ContractError("op inputs recorded on different tapes");
  return t;
}

std::string pair_str(const Shape& a, const Shape& b) { return shape_str(a) + " and " + shape_str(b); }

std::size_t last_dim(const Shape& s) { return s.empty() ? 1 : s.back(); }

}  // namespace

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  Tape<T>& tp = tape_of(a, b);
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0])
    throw DimensionError("matmul: incompatible shapes " + pair_str(sa, sb));
  const std::size_t m = sa[0], k = sa[1], n = sb[1];
  Tensor<T> out(Shape{m, n});
  kernels::matmul<T>(a.value().values, b.value().values, out.values, m, k, n);
  return tp.record("matmul", std::move(out), {a.id, b.id}, [ia = a.id, ib = b.id, m, k, n](Tape<T>& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(ia)) kernels::matmul_grad_a<T>(g, t.value(ib).values, t.grad(ia), m, k, n);
    if (t.needs_grad(ib)) kernels::matmul_grad_b<T>(t.value(ia).values, g, t.grad(ib), m, k, n);
  });
}

template <typename T>
Var<T> transpose(Var<T> x) {
  Tape<T>& tp = tape_of(x);
  const Shape& s = x.shape();
  if (s.size() != 2) throw DimensionError("transpose: expected rank 2, got " + shape_str(s));
  const std::size_t r = s[0], c = s[1];
  Tensor<T> out(Shape{c, r});
  const auto& xv = x.value().values;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.values[j * r + i] = xv[i * c + j];
  return tp.record("transpose", std::move(out), {x.id}, [ix = x.id, r, c](Tape<T>& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad(ix);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[j * r + i];
  });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  Tape<T>& tp = tape_of(a, b);
  if (a.shape() != b.shape()) throw DimensionError("add: shape mismatch " + pair_str(a.shape(), b.shape()));
  Tensor<T> out = a.value();
  out.grad.clear();
  const auto& bv = b.value().values;
  for (std::size_t i = 0; i < out.numel(); ++i) out.values[i] += bv[i];
  return tp.record("add", std::move(out), {a.id, b.id}, [ia = a.id, ib = b.id](Tape<T>& t, std::size_t self) {
    const auto& g = t.grad(self);
    for (std::size_t id : {ia, ib}) {
      if (!t.needs_grad(id)) continue;
      auto& gx = t.grad(id);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
  });
}

template <typename T>
Var<T> add_bias(Var<T> x, Var<T> bias) {
  Tape<T>& tp = tape_of(x, bias);
  const std::size_t n = last_dim(x.shape());
  if (bias.numel() != n)
    throw DimensionError("add_bias: bias " + shape_str(bias.shape()) + " does not match trailing dim of " +
                         shape_str(x.shape()));
  Tensor<T> out(x.shape(), x.value().values);
  const auto& bv = bias.value().values;
  for (std::size_t i = 0; i < out.numel(); ++i) out.values[i] += bv[i % n];
  return tp.record("add_bias", std::move(out), {x.id, bias.id}, [ix = x.id, ib = bias.id, n](Tape<T>& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(ix)) {
      auto& gx = t.grad(ix);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (t.needs_grad(ib)) {
      auto& gb = t.grad(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i % n] += g[i];
    }
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  Tape<T>& tp = tape_of(a, b);
  if (a.shape() != b.shape()) throw DimensionError("mul: shape mismatch " + pair_str(a.shape(), b.shape()));
  Tensor<T> out(a.shape());
  const auto& av = a.value().values;
  const auto& bv = b.value().values;
  for (std::size_t i = 0; i < out.numel(); ++i) out.values[i] = av[i] * bv[i];
  return tp.record("mul", std::move(out), {a.id, b.id}, [ia = a.id, ib = b.id](Tape<T>& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(ia)) {
      const auto& bv = t.value(ib).values;
      auto& ga = t.grad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.needs_grad(ib)) {
      const auto& av = t.value(ia).values;
      auto& gb = t.grad(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

template <typename T>
Var<T> scale(Var<T> x, T factor) {
  Tape<T>& tp = tape_of(x);
  Tensor<T> out(x.shape(), x.value().values);
  for (auto& v : out.values) v *= factor;
  return tp.record("scale", std::move(out), {x.id}, [ix = x.id, factor](Tape<T>& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * factor;
  });
}

template <typename T>
Var<T> mul_const(Var<T> x, const Tensor<T>& mask) {
  Tape<T>& tp = tape_of(x);
  if (mask.numel() != x.numel())
    throw DimensionError("mul_const: mask " + shape_str(mask.shape) + " vs input " + shape_str(x.shape()));
  Tensor<T> out(x.shape(), x.value().values);
  for (std::size_t i = 0; i < out.numel(); ++i) out.values[i] *= mask.values[i];
  return tp.record("mul_const", std::move(out), {x.id}, [ix = x.id, m = mask.values](Tape<T>& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * m[i];
  });
}

template <typename T>
Var<T> activation(Var<T> x, Activation kind) {
  if (kind == Activation::None) return x;
  Tape<T>& tp = tape_of(x);
  Tensor<T> out(x.shape(), x.value().values);
  const bool is_tanh = kind == Activation::Tanh;
  for (auto& v : out.values) v = is_tanh ? std::tanh(v) : T(1) / (T(1) + std::exp(-v));
  return tp.record(is_tanh ? "tanh" : "sigmoid", std::move(out), {x.id}, [ix = x.id, is_tanh](Tape<T>& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& y = t.value(self).values;
    auto& gx = t.grad(ix);
    if (is_tanh)
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (T(1) - y[i] * y[i]);
    else
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (T(1) - y[i]);
  });
}

template <typename T>
Var<T> softmax(Var<T> x) {
  Tape<T>& tp = tape_of(x);
  const std::size_t k = last_dim(x.shape());
  Tensor<T> out(x.shape(), x.value().values);
  const std::size_t rows = out.numel() / k;
  for (std::size_t r = 0; r < rows; ++r) {
    T* v = out.values.data() + r * k;
    const T mx = *std::max_element(v, v + k);
    T s = T(0);
    for (std::size_t j = 0; j < k; ++j) {
      v[j] = std::exp(v[j] - mx);
      s += v[j];
    }
    for (std::size_t j = 0; j < k; ++j) v[j] /= s;
  }
  return tp.record("softmax", std::move(out), {x.id}, [ix = x.id, k, rows](Tape<T>& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& y = t.value(self).values;
    auto& gx = t.grad(ix);
    for (std::size_t r = 0; r < rows; ++r) {
      T dot = T(0);
      for (std::size_t j = 0; j < k; ++j) dot += g[r * k + j] * y[r * k + j];
      for (std::size_t j = 0; j < k; ++j) gx[r * k + j] += y[r * k + j] * (g[r * k + j] - dot);
    }
  });
}

template <typename T>
Var<T> normalize_rows(Var<T> x) {
  Tape<T>& tp = tape_of(x);
  const std::size_t k = last_dim(x.shape());
  Tensor<T> out(x.shape(), x.value().values);
  const std::size_t rows = out.numel() / k;
  std::vector<T> sums(rows, T(0));
  for (std::size_t r = 0; r < rows; ++r) {
    T* v = out.values.data() + r * k;
    for (std::size_t j = 0; j < k; ++j) sums[r] += v[j];
    if (!(sums[r] > T(0))) throw NumericError("normalize_rows", "row " + std::to_string(r) + " sums to zero");
    for (std::size_t j = 0; j < k; ++j) v[j] /= sums[r];
  }
  return tp.record("normalize_rows", std::move(out), {x.id}, [ix = x.id, k, rows, sums = std::move(sums)](Tape<T>& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& y = t.value(self).values;
    auto& gx = t.grad(ix);
    for (std::size_t r = 0; r < rows; ++r) {
      T dot = T(0);
      for (std::size_t j = 0; j < k; ++j) dot += g[r * k + j] * y[r * k + j];
      for (std::size_t j = 0; j < k; ++j) gx[r * k + j] += (g[r * k + j] - dot) / sums[r];
    }
  });
}

template <typename T>
Var<T> conv2d_same(Var<T> input, Var<T> kernel, Var<T> bias, std::size_t stride) {
  Tape<T>& tp = tape_of(input, kernel);
  if (bias.tape != input.tape) throw ContractError("conv2d_same: bias on a different tape");
  const Shape& si = input.shape();
  const Shape& sk = kernel.shape();
  if (si.size() != 3) throw DimensionError("conv2d_same: input must be HxWxC, got " + shape_str(si));
  if (sk.size() != 4) throw DimensionError("conv2d_same: kernel must be kh x kw x Cin x Cout, got " + shape_str(sk));
  const auto g = kernels::ConvGeometry::same(si[0], si[1], si[2], sk[3], sk[0], sk[1], stride);
  if (sk[2] != si[2])
    throw DimensionError("conv2d_same: channel mismatch between input " + shape_str(si) + " and kernel " +
                         shape_str(sk));
  if (bias.numel() != sk[3])
    throw DimensionError("conv2d_same: bias " + shape_str(bias.shape()) + " vs Cout " + std::to_string(sk[3]));
  Tensor<T> out(Shape{g.out_height, g.out_width, g.out_channels});
  kernels::conv2d_forward<T>(input.value().values, kernel.value().values, bias.value().values, out.values, g);
  return tp.record("conv2d", std::move(out), {input.id, kernel.id, bias.id},
                   [ii = input.id, ik = kernel.id, ib = bias.id, g](Tape<T>& t, std::size_t self) {
                     const auto& gr = t.grad(self);
                     if (t.needs_grad(ii)) kernels::conv2d_backward_input<T>(gr, t.value(ik).values, t.grad(ii), g);
                     if (t.needs_grad(ik)) kernels::conv2d_backward_kernel<T>(t.value(ii).values, gr, t.grad(ik), g);
                     if (t.needs_grad(ib)) kernels::conv2d_backward_bias<T>(gr, t.grad(ib), g);
                   });
}

template <typename T>
Var<T> pool2d(Var<T> input, kernels::PoolKind kind, std::size_t window, std::size_t stride) {
  Tape<T>& tp = tape_of(input);
  const Shape& si = input.shape();
  if (si.size() != 3) throw DimensionError("pool2d: input must be HxWxC, got " + shape_str(si));
  const auto g = kernels::PoolGeometry::make(si[0], si[1], si[2], window, stride);
  Tensor<T> out(Shape{g.out_height, g.out_width, g.channels});
  std::vector<std::size_t> argmax(kind == kernels::PoolKind::Max ? out.numel() : 0);
  kernels::pool2d_forward<T>(input.value().values, out.values, argmax, kind, g);
  const char* name = kind == kernels::PoolKind::Max ? "max_pool" : "avg_pool";
  return tp.record(name, std::move(out), {input.id}, [ii = input.id, kind, g, am = std::move(argmax)](Tape<T>& t, std::size_t self) {
    kernels::pool2d_backward<T>(t.grad(self), am, t.grad(ii), kind, g);
  });
}

template <typename T>
Var<T> concat_last(const std::vector<Var<T>>& inputs) {
  if (inputs.empty()) throw DimensionError("concat: empty input list");
  Tape<T>& tp = tape_of(inputs.front());
  Shape lead = inputs.front().shape();
  lead.pop_back();
  std::size_t total = 0;
  std::vector<std::size_t> widths, ids;
  for (const auto& v : inputs) {
    if (v.tape != &tp) throw ContractError("concat: inputs on different tapes");
    Shape s = v.shape();
    const std::size_t w = s.back();
    s.pop_back();
    if (s != lead)
      throw DimensionError("concat: leading dims differ: " + pair_str(inputs.front().shape(), v.shape()));
    widths.push_back(w);
    ids.push_back(v.id);
    total += w;
  }
  const std::size_t rows = shape_numel(lead);
  Shape os = lead;
  os.push_back(total);
  Tensor<T> out(os);
  std::size_t off = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const auto& src = inputs[k].value().values;
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(src.begin() + r * widths[k], widths[k], out.values.begin() + r * total + off);
    off += widths[k];
  }
  return tp.record("concat", std::move(out), ids, [ids, widths, rows, total](Tape<T>& t, std::size_t self) {
    const auto& g = t.grad(self);
    std::size_t off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (t.needs_grad(ids[k])) {
        auto& gx = t.grad(ids[k]);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < widths[k]; ++j) gx[r * widths[k] + j] += g[r * total + off + j];
      }
      off += widths[k];
    }
  });
}

template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& inputs) {
  for (const auto& v : inputs)
    if (v.shape().size() != 3) throw DimensionError("concat_channels: expected HxWxC, got " + shape_str(v.shape()));
  return concat_last(inputs);
}

template <typename T>
Var<T> slice_last(Var<T> x, std::size_t begin, std::size_t count) {
  Tape<T>& tp = tape_of(x);
  const std::size_t w = last_dim(x.shape());
  if (count == 0 || begin + count > w)
    throw DimensionError("slice: range [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") outside last dim of " + shape_str(x.shape()));
  Shape os = x.shape();
  os.back() = count;
  Tensor<T> out(os);
  const std::size_t rows = x.numel() / w;
  const auto& xv = x.value().values;
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(xv.begin() + r * w + begin, count, out.values.begin() + r * count);
  return tp.record("slice", std::move(out), {x.id}, [ix = x.id, begin, count, w, rows](Tape<T>& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad(ix);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < count; ++j) gx[r * w + begin + j] += g[r * count + j];
  });
}

template <typename T>
Var<T> reshape(Var<T> x, Shape shape) {
  Tape<T>& tp = tape_of(x);
  if (shape_numel(shape) != x.numel())
    throw DimensionError("reshape: element count mismatch " + pair_str(x.shape(), shape));
  Tensor<T> out(std::move(shape), x.value().values);
  return tp.record("reshape", std::move(out), {x.id}, [ix = x.id](Tape<T>& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

template <typename T>
Var<T> row(Var<T> x, std::size_t r) {
  Tape<T>& tp = tape_of(x);
  const Shape& s = x.shape();
  if (s.size() != 2 || r >= s[0]) throw DimensionError("row " + std::to_string(r) + " out of range for " + shape_str(s));
  const std::size_t d = s[1];
  Tensor<T> out(Shape{1, d});
  std::copy_n(x.value().values.begin() + r * d, d, out.values.begin());
  return tp.record("row", std::move(out), {x.id}, [ix = x.id, r, d](Tape<T>& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad(ix);
    for (std::size_t j = 0; j < d; ++j) gx[r * d + j] += g[j];
  });
}

template <typename T>
Var<T> stack_rows(const std::vector<Var<T>>& rows) {
  if (rows.empty()) throw DimensionError("stack_rows: empty input list");
  Tape<T>& tp = tape_of(rows.front());
  const std::size_t d = rows.front().numel();
  std::vector<std::size_t> ids;
  Tensor<T> out(Shape{rows.size(), d});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].tape != &tp) throw ContractError("stack_rows: inputs on different tapes");
    if (rows[r].numel() != d) throw DimensionError("stack_rows: row widths differ");
    std::copy_n(rows[r].value().values.begin(), d, out.values.begin() + r * d);
    ids.push_back(rows[r].id);
  }
  return tp.record("stack_rows", std::move(out), ids, [ids, d](Tape<T>& t, std::size_t self) {
    const auto& g = t.grad(self);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      if (!t.needs_grad(ids[r])) continue;
      auto& gx = t.grad(ids[r]);
      for (std::size_t j = 0; j < d; ++j) gx[j] += g[r * d + j];
    }
  });
}

template <typename T>
Var<T> mean_rows(Var<T> x) {
  Tape<T>& tp = tape_of(x);
  const Shape& s = x.shape();
  if (s.size() != 2) throw DimensionError("mean_rows: expected rank 2, got " + shape_str(s));
  const std::size_t n = s[0], d = s[1];
  Tensor<T> out(Shape{1, d});
  const auto& xv = x.value().values;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < d; ++j) out.values[j] += xv[r * d + j];
  for (auto& v : out.values) v /= static_cast<T>(n);
  return tp.record("mean_rows", std::move(out), {x.id}, [ix = x.id, n, d](Tape<T>& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad(ix);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < d; ++j) gx[r * d + j] += g[j] / static_cast<T>(n);
  });
}

template <typename T>
Var<T> sum(Var<T> x) {
  Tape<T>& tp = tape_of(x);
  T s = T(0);
  for (T v : x.value().values) s += v;
  return tp.record("sum", Tensor<T>(Shape{1}, std::vector<T>{s}), {x.id}, [ix = x.id](Tape<T>& t, std::size_t self) {
    const T g = t.grad(self)[0];
    for (auto& v : t.grad(ix)) v += g;
  });
}

template <typename T>
Var<T> sum_squares(Var<T> x) {
  Tape<T>& tp = tape_of(x);
  T s = T(0);
  for (T v : x.value().values) s += v * v;
  return tp.record("sum_squares", Tensor<T>(Shape{1}, std::vector<T>{s}), {x.id}, [ix = x.id](Tape<T>& t, std::size_t self) {
    const T g = t.grad(self)[0];
    const auto& xv = t.value(ix).values;
    auto& gx = t.grad(ix);
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += T(2) * g * xv[i];
  });
}

template <typename T>
Var<T> cross_entropy(Var<T> probs, std::size_t label) {
  Tape<T>& tp = tape_of(probs);
  if (label >= probs.numel())
    throw DimensionError("cross_entropy: label " + std::to_string(label) + " outside " + shape_str(probs.shape()));
  constexpr T kFloor = T(1e-12);
  const T p = probs.value().values[label];
  const bool clamped = !(p >= kFloor);
  const T loss = -std::log(clamped ? kFloor : p);
  return tp.record("cross_entropy", Tensor<T>(Shape{1}, std::vector<T>{loss}), {probs.id},
                   [ip = probs.id, label, clamped](Tape<T>& t, std::size_t self) {
                     if (clamped) return;
                     const T g = t.grad(self)[0];
                     t.grad(ip)[label] -= g / t.value(ip).values[label];
                   });
}

#define CARDIONET_OPS(T)                                                                            \
  template Var<T> matmul<T>(Var<T>, Var<T>);                                                        \
  template Var<T> transpose<T>(Var<T>);                                                             \
  template Var<T> add<T>(Var<T>, Var<T>);                                                           \
  template Var<T> add_bias<T>(Var<T>, Var<T>);                                                      \
  template Var<T> mul<T>(Var<T>, Var<T>);                                                           \
  template Var<T> scale<T>(Var<T>, T);                                                              \
  template Var<T> mul_const<T>(Var<T>, const Tensor<T>&);                                           \
  template Var<T> activation<T>(Var<T>, Activation);                                                \
  template Var<T> softmax<T>(Var<T>);                                                               \
  template Var<T> normalize_rows<T>(Var<T>);                                                        \
  template Var<T> conv2d_same<T>(Var<T>, Var<T>, Var<T>, std::size_t);                              \
  template Var<T> pool2d<T>(Var<T>, kernels::PoolKind, std::size_t, std::size_t);                   \
  template Var<T> concat_last<T>(const std::vector<Var<T>>&);                                       \
  template Var<T> concat_channels<T>(const std::vector<Var<T>>&);                                   \
  template Var<T> slice_last<T>(Var<T>, std::size_t, std::size_t);                                  \
  template Var<T> reshape<T>(Var<T>, Shape);                                                        \
  template Var<T> row<T>(Var<T>, std::size_t);                                                      \
  template Var<T> stack_rows<T>(const std::vector<Var<T>>&);                                        \
  template Var<T> mean_rows<T>(Var<T>);                                                             \
  template Var<T> sum<T>(Var<T>);                                                                   \
  template Var<T> sum_squares<T>(Var<T>);                                                           \
  template Var<T> cross_entropy<T>(Var<T>, std::size_t);

CARDIONET_OPS(float)
CARDIONET_OPS(double)

#undef CARDIONET_OPS

}  // namespace cardionet::ops
