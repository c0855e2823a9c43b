#include "cardionet/grad_suite.hpp"

#include <functional>
#include <memory>

#include "cardionet/errors.hpp"
#include "cardionet/layers.hpp"
#include "cardionet/model.hpp"
#include "cardionet/ops.hpp"
#include "cardionet/optim.hpp"

namespace cardionet {

namespace {

using T = double;
using V = Var<T>;

Tensor<T> random_tensor(Shape shape, Rng rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.values) v = rng.uniform(lo, hi);
  return t;
}

// Fixed random weighting so every output element feeds the loss differently.
V project(V y, std::uint64_t salt) {
  const Tensor<T> w = random_tensor(y.shape(), Rng(91).substream("project", {salt}));
  return ops::sum(ops::mul_const(y, w));
}

// A check owns its parameter tensors; `loss` builds the scalar on a tape.
struct Case {
  std::string group, component;
  std::vector<std::unique_ptr<Tensor<T>>> storage;
  std::vector<ParamRef<T>> params;
  LossFn<T> loss;

  Tensor<T>& add(const std::string& path, Tensor<T> t) {
    storage.push_back(std::make_unique<Tensor<T>>(std::move(t)));
    params.push_back({path, storage.back().get(), true});
    return *storage.back();
  }
};

GradSuiteEntry run(Case& c) {
  return {c.group, c.component, grad_check<T>(c.loss, c.params, kGradEpsilon)};
}

std::vector<GradSuiteEntry> op_suite() {
  std::vector<GradSuiteEntry> out;
  Rng rng(2024);
  std::uint64_t salt = 0;
  auto unary = [&](const std::string& name, Shape shape, std::function<V(V)> f, double lo = -1.0, double hi = 1.0) {
    Case c{"ops", name, {}, {}, {}};
    Tensor<T>& x = c.add(name + "/x", random_tensor(shape, rng.substream(name), lo, hi));
    const std::uint64_t s = ++salt;
    c.loss = [&x, f, s](Tape<T>& tape) { return project(f(tape.param(x)), s); };
    out.push_back(run(c));
  };
  auto binary = [&](const std::string& name, Shape sa, Shape sb, std::function<V(V, V)> f) {
    Case c{"ops", name, {}, {}, {}};
    Tensor<T>& a = c.add(name + "/a", random_tensor(sa, rng.substream(name, {0})));
    Tensor<T>& b = c.add(name + "/b", random_tensor(sb, rng.substream(name, {1})));
    const std::uint64_t s = ++salt;
    c.loss = [&a, &b, f, s](Tape<T>& tape) { return project(f(tape.param(a), tape.param(b)), s); };
    out.push_back(run(c));
  };

  binary("matmul", {3, 4}, {4, 5}, [](V a, V b) { return ops::matmul(a, b); });
  unary("transpose", {3, 4}, [](V x) { return ops::transpose(x); });
  binary("add", {3, 4}, {3, 4}, [](V a, V b) { return ops::add(a, b); });
  binary("add_bias", {2, 3, 4}, {4}, [](V a, V b) { return ops::add_bias(a, b); });
  binary("mul", {3, 4}, {3, 4}, [](V a, V b) { return ops::mul(a, b); });
  unary("scale", {3, 4}, [](V x) { return ops::scale(x, 0.37); });
  {
    const Tensor<T> mask = random_tensor({3, 4}, rng.substream("mask"));
    unary("mul_const", {3, 4}, [mask](V x) { return ops::mul_const(x, mask); });
  }
  unary("tanh", {3, 4}, [](V x) { return ops::tanh(x); }, -2.0, 2.0);
  unary("sigmoid", {3, 4}, [](V x) { return ops::sigmoid(x); }, -2.0, 2.0);
  unary("softmax", {3, 5}, [](V x) { return ops::softmax(x); }, -2.0, 2.0);
  unary("normalize_rows", {3, 4}, [](V x) { return ops::normalize_rows(x); }, 0.2, 1.5);
  for (std::size_t k : {1, 3, 5}) {
    for (std::size_t stride : {1, 2}) {
      const std::string name = "conv2d k" + std::to_string(k) + " s" + std::to_string(stride);
      Case c{"ops", name, {}, {}, {}};
      Tensor<T>& x = c.add("conv2d/input", random_tensor({7, 6, 2}, rng.substream(name, {0})));
      Tensor<T>& w = c.add("conv2d/kernel", random_tensor({k, k, 2, 3}, rng.substream(name, {1})));
      Tensor<T>& b = c.add("conv2d/bias", random_tensor({3}, rng.substream(name, {2})));
      const std::uint64_t s = ++salt;
      c.loss = [&x, &w, &b, stride, s](Tape<T>& tape) {
        return project(ops::conv2d_same(tape.param(x), tape.param(w), tape.param(b), stride), s);
      };
      out.push_back(run(c));
    }
  }
  unary("max_pool 2/2", {6, 7, 2}, [](V x) { return ops::pool2d(x, kernels::PoolKind::Max, 2, 2); });
  unary("max_pool 3/2", {7, 7, 2}, [](V x) { return ops::pool2d(x, kernels::PoolKind::Max, 3, 2); });
  unary("avg_pool 3/3", {6, 6, 2}, [](V x) { return ops::pool2d(x, kernels::PoolKind::Avg, 3, 3); });
  unary("avg_pool 2/1", {5, 4, 2}, [](V x) { return ops::pool2d(x, kernels::PoolKind::Avg, 2, 1); });
  binary("concat", {2, 3}, {2, 4}, [](V a, V b) { return ops::concat_last<T>({a, b, a}); });
  binary("concat_channels", {3, 3, 2}, {3, 3, 1}, [](V a, V b) { return ops::concat_channels<T>({a, b}); });
  unary("slice", {3, 6}, [](V x) { return ops::slice_last(x, 2, 3); });
  unary("reshape", {2, 3, 4}, [](V x) { return ops::reshape(x, Shape{4, 6}); });
  unary("row", {4, 3}, [](V x) { return ops::row(x, 2); });
  unary("stack_rows", {4, 3}, [](V x) { return ops::stack_rows<T>({ops::row(x, 3), ops::row(x, 0), ops::row(x, 3)}); });
  unary("mean_rows", {4, 3}, [](V x) { return ops::mean_rows(x); });
  unary("sum", {3, 4}, [](V x) { return ops::sum(x); });
  unary("sum_squares", {3, 4}, [](V x) { return ops::sum_squares(x); });
  unary("cross_entropy", {1, 2}, [](V x) { return ops::cross_entropy(ops::softmax(x), 1); }, -2.0, 2.0);
  return out;
}

template <typename P>
void add_all(Case& c, P& params, const std::string& prefix) {
  std::vector<ParamRef<T>> refs;
  params.collect(prefix, refs);
  for (auto& r : refs) c.params.push_back(r);
}

std::vector<GradSuiteEntry> layer_suite() {
  std::vector<GradSuiteEntry> out;
  const Rng rng(77);

  for (auto [name, act] : {std::pair{"dense tanh", ops::Activation::Tanh},
                           std::pair{"dense sigmoid", ops::Activation::Sigmoid},
                           std::pair{"dense linear", ops::Activation::None}}) {
    auto p = std::make_shared<DenseParams<T>>(init_dense<T>(5, 3, act, rng.substream(name)));
    for (auto& b : p->b.values) b = 0.1;
    Case c{"layers", name, {}, {}, {}};
    Tensor<T>& x = c.add("dense/input", random_tensor({2, 5}, rng.substream(name, {1})));
    add_all(c, *p, "dense");
    c.loss = [p, &x](Tape<T>& tape) { return project(dense_forward(*p, tape.param(x)), 1); };
    out.push_back(run(c));
  }
  {
    auto p = std::make_shared<ConvParams<T>>(init_conv<T>(3, 2, 3, 2, rng.substream("conv")));
    Case c{"layers", "conv + tanh", {}, {}, {}};
    Tensor<T>& x = c.add("conv/input", random_tensor({6, 5, 2}, rng.substream("conv", {1})));
    add_all(c, *p, "conv");
    c.loss = [p, &x](Tape<T>& tape) { return project(conv_forward(*p, tape.param(x)), 2); };
    out.push_back(run(c));
  }
  {
    auto p = std::make_shared<InceptionBlockParams<T>>(init_inception<T>(2, 2, 1, 2, rng.substream("inception")));
    Case c{"layers", "inception block", {}, {}, {}};
    Tensor<T>& x = c.add("inception/input", random_tensor({5, 5, 2}, rng.substream("inception", {1})));
    add_all(c, *p, "inception");
    c.loss = [p, &x](Tape<T>& tape) { return project(inception_block_forward(*p, tape.param(x)), 3); };
    out.push_back(run(c));
  }
  {
    auto p = std::make_shared<LstmCellParams<T>>(init_lstm_cell<T>(3, 4, rng.substream("cell")));
    Case c{"layers", "lstm_cell_step", {}, {}, {}};
    Tensor<T>& x = c.add("cell/x", random_tensor({1, 3}, rng.substream("cell", {1})));
    Tensor<T>& h = c.add("cell/h_prev", random_tensor({1, 4}, rng.substream("cell", {2})));
    Tensor<T>& cp = c.add("cell/c_prev", random_tensor({1, 4}, rng.substream("cell", {3})));
    add_all(c, *p, "cell");
    c.loss = [p, &x, &h, &cp](Tape<T>& tape) {
      auto s = lstm_cell_step(*p, tape.param(x), tape.param(h), tape.param(cp));
      return ops::add(project(s.h, 4), project(s.c, 5));
    };
    out.push_back(run(c));
  }
  for (bool reverse : {false, true}) {
    const std::string name = reverse ? "lstm scan reverse" : "lstm scan forward";
    auto p = std::make_shared<LstmCellParams<T>>(init_lstm_cell<T>(3, 2, rng.substream(name)));
    Case c{"layers", name, {}, {}, {}};
    Tensor<T>& x = c.add("lstm/input", random_tensor({4, 3}, rng.substream(name, {1})));
    add_all(c, *p, "lstm");
    c.loss = [p, &x, reverse](Tape<T>& tape) {
      return project(ops::stack_rows(lstm_scan(*p, tape.param(x), reverse)), 6);
    };
    out.push_back(run(c));
  }
  {
    auto p = std::make_shared<BiLstmParams<T>>(init_bilstm<T>(3, 2, rng.substream("bilstm")));
    Case c{"layers", "bilstm", {}, {}, {}};
    Tensor<T>& x = c.add("bilstm/input", random_tensor({4, 3}, rng.substream("bilstm", {1})));
    add_all(c, *p, "bilstm");
    c.loss = [p, &x](Tape<T>& tape) { return project(bilstm_forward(*p, tape.param(x)), 7); };
    out.push_back(run(c));
  }
  for (std::size_t width : {256, 2}) {
    for (bool scaled : {true, false}) {
      const std::string name = "self_attention width " + std::to_string(width) + (scaled ? " scaled" : " unscaled");
      auto p = std::make_shared<SelfAttentionParams<T>>(init_self_attention<T>(4, 3, width, rng.substream(name)));
      p->scale_scores = scaled;
      Case c{"layers", name, {}, {}, {}};
      Tensor<T>& x = c.add("attention/input", random_tensor({5, 4}, rng.substream(name, {1})));
      add_all(c, *p, "attention");
      c.loss = [p, &x](Tape<T>& tape) {
        auto a = self_attention_forward(*p, tape.param(x));
        return ops::add(project(a.context, 8), project(a.weights, 9));
      };
      out.push_back(run(c));
    }
  }
  {
    Case c{"layers", "dropout", {}, {}, {}};
    Tensor<T>& x = c.add("dropout/input", random_tensor({3, 6}, rng.substream("dropout")));
    c.loss = [&x](Tape<T>& tape) {
      return project(dropout_forward(tape.param(x), DropoutSpec{0.5, Mode::Train}, Rng(5)), 10);
    };
    out.push_back(run(c));
  }
  {
    Case c{"layers", "l2_penalty", {}, {}, {}};
    c.add("l2/weight", random_tensor({3, 4}, rng.substream("l2", {0})));
    c.add("l2/bias", random_tensor({4}, rng.substream("l2", {1})));
    c.params.back().is_weight = false;
    const auto params = c.params;
    c.loss = [params](Tape<T>& tape) {
      for (const auto& p : params) tape.param(*p.tensor);
      return l2_penalty(tape, params, 0.01);
    };
    out.push_back(run(c));
  }
  return out;
}

std::vector<GradSuiteEntry> model_suite() {
  std::vector<GradSuiteEntry> out;
  for (Variant v : {Variant::CnnOnly, Variant::CnnLstm, Variant::CnnBilstmAttn}) {
    const ModelConfig cfg = ModelConfig::tiny(v);
    auto p = std::make_shared<ModelParams<T>>(build_model<T>(cfg, Rng(3)));
    auto image = std::make_shared<Tensor<T>>(
        random_tensor({cfg.input_size, cfg.input_size, cfg.input_channels}, Rng(4).substream("image")));
    Case c{"model", std::string(variant_name(v)), {}, {}, {}};
    c.params = p->named();
    auto params = c.params;
    c.loss = [p, image, params](Tape<T>& tape) {
      auto f = model_forward(tape, *p, *image, Mode::Train, Rng(11));
      return ops::add(ops::cross_entropy(f.probs, 1), l2_penalty(tape, params, 0.01));
    };
    out.push_back(run(c));
  }
  return out;
}

}  // namespace

std::vector<GradSuiteEntry> run_grad_suite(std::string_view group) {
  if (group != "all" && group != "ops" && group != "layers" && group != "model")
    throw ConfigError("unknown gradcheck module '" + std::string(group) + "' (expected all, ops, layers or model)");
  std::vector<GradSuiteEntry> out;
  auto append = [&out](std::vector<GradSuiteEntry> more) {
    for (auto& e : more) out.push_back(std::move(e));
  };
  if (group == "all" || group == "ops") append(op_suite());
  if (group == "all" || group == "layers") append(layer_suite());
  if (group == "all" || group == "model") append(model_suite());
  return out;
}

}  // namespace cardionet
