// Acceptance checks, one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cardionet/checkpoint.hpp"
#include "cardionet/data.hpp"
#include "cardionet/errors.hpp"
#include "cardionet/grad_suite.hpp"
#include "cardionet/layers.hpp"
#include "cardionet/metrics.hpp"
#include "cardionet/model.hpp"
#include "cardionet/optim.hpp"
#include "cardionet/synthetic.hpp"
#include "cardionet/train.hpp"
#include "cli.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace cardionet;
namespace fs = std::filesystem;
using oracle::Vec;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failures; the first few are kept for the report line.
struct Checker {
  std::size_t checks = 0, failures = 0;
  std::vector<std::string> notes;
  void expect(bool ok, const std::string& what) {
    ++checks;
    if (ok) return;
    ++failures;
    if (notes.size() < 3) notes.push_back(what);
  }
  std::string summary() const {
    std::string s = std::to_string(checks - failures) + "/" + std::to_string(checks) + " checks";
    for (const auto& n : notes) s += "; " + n;
    return s;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "cardionet");
  std::vector<const char*> argv;
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// The synthetic 96x96 set: 43 smooth + 51 high-frequency patches, built once.
const fs::path& synthetic_manifest() {
  static ScratchDir dir("acceptance_data");
  static const fs::path manifest = write_synthetic_dataset(dir.path(), SyntheticSpec{});
  return manifest;
}

void fill(Tensor<double>& t, Rng& rng) {
  for (auto& v : t.values) v = rng.uniform(-1.0, 1.0);
}

// ---------------------------------------------------------------------------

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  const CliRun r = cli({"gradcheck", "--module", "all"});
  const double cli_seconds = seconds_since(t0);

  const auto entries = run_grad_suite("all");
  double worst = 0.0;
  std::string worst_name;
  std::size_t models = 0, failed = 0;
  for (const auto& e : entries) {
    if (e.result.max_relative_error >= worst) {
      worst = e.result.max_relative_error;
      worst_name = e.group + "/" + e.component;
    }
    failed += !e.passed() || e.result.checked == 0;
    models += e.group == "model";
  }
  Outcome o;
  o.pass = r.code == 0 && failed == 0 && models == 3 && worst < kGradTolerance && cli_seconds < 120.0;
  o.detail = std::to_string(entries.size()) + " components (" + std::to_string(models) +
             " model variants), max rel err " + fmt("%.2e", worst) + " at " + worst_name + ", exit " +
             std::to_string(r.code) + ", " + fmt("%.2f", cli_seconds) + " s";
  return o;
}

Outcome oracle_equivalence() {
  constexpr double tol = 1e-10;
  constexpr int instances = 100;
  Checker c;
  Rng rng(2024);
  double worst = 0.0;
  auto close = [&](const Vec& got, const Vec& want, const std::string& what) {
    const double d = oracle::max_abs_diff(got, want);
    worst = std::max(worst, d);
    c.expect(d <= tol, what + " diff " + fmt("%.3g", d));
  };

  for (int i = 0; i < instances; ++i) {
    const std::size_t h = 1 + rng.below(9), w = 1 + rng.below(9), cin = 1 + rng.below(4), cout = 1 + rng.below(4);
    const std::size_t k = 2 * rng.below(3) + 1, s = 1 + rng.below(2);
    Tensor<double> in({h, w, cin}), ker({k, k, cin, cout}), bias({cout});
    fill(in, rng), fill(ker, rng), fill(bias, rng);
    Tape<double> tape;
    auto y = ops::conv2d_same(tape.constant(in), tape.constant(ker), tape.constant(bias), s);
    close(y.value().values, oracle::conv2d_same(in.values, h, w, cin, ker.values, k, k, cout, bias.values, s),
          "conv2d_same");
  }

  for (int i = 0; i < instances; ++i) {
    const std::size_t win = 1 + rng.below(3), s = 1 + rng.below(3);
    const std::size_t h = win + rng.below(8), w = win + rng.below(8), ch = 1 + rng.below(4);
    Tensor<double> in({h, w, ch});
    fill(in, rng);
    const bool max = i % 2 == 0;
    Tape<double> tape;
    auto y = ops::pool2d(tape.constant(in), max ? kernels::PoolKind::Max : kernels::PoolKind::Avg, win, s);
    close(y.value().values, oracle::pool2d(in.values, h, w, ch, win, s, max), max ? "max pool" : "avg pool");
  }

  for (int i = 0; i < instances; ++i) {
    const std::size_t in = 1 + rng.below(6), hid = 1 + rng.below(6);
    auto p = init_lstm_cell<double>(in, hid, Rng(rng.next_u64()));
    for (auto* t : {&p.W_i, &p.W_f, &p.W_o, &p.W_g, &p.b_i, &p.b_f, &p.b_o, &p.b_g}) fill(*t, rng);
    Tensor<double> x({1, in}), h0({1, hid}), c0({1, hid});
    fill(x, rng), fill(h0, rng), fill(c0, rng);
    Tape<double> tape;
    auto st = lstm_cell_step(p, tape.constant(x), tape.constant(h0), tape.constant(c0));
    const oracle::LstmWeights wts{{p.W_i.values, p.W_f.values, p.W_o.values, p.W_g.values},
                                  {p.b_i.values, p.b_f.values, p.b_o.values, p.b_g.values}};
    Vec h, cc;
    oracle::lstm_step(wts, in, hid, x.values, h0.values, c0.values, h, cc);
    close(st.h.value().values, h, "lstm h");
    close(st.c.value().values, cc, "lstm c");
  }

  for (int i = 0; i < instances; ++i) {
    const std::size_t T = 1 + rng.below(8), d = 1 + rng.below(6), dk = 1 + rng.below(5);
    const std::size_t width = i % 4 == 0 ? 256 : 1 + rng.below(2 * T);
    auto p = init_self_attention<double>(d, dk, width, Rng(rng.next_u64()));
    p.scale_scores = i % 3 != 0;
    for (auto* t : {&p.query.W, &p.query.b, &p.key.W, &p.key.b, &p.value.W, &p.value.b}) fill(*t, rng);
    Tensor<double> seq({T, d});
    fill(seq, rng);
    Tape<double> tape;
    auto r = self_attention_forward(p, tape.constant(seq));
    const auto o = oracle::self_attention(seq.values, T, d, p.query.W.values, p.query.b.values, p.key.W.values,
                                          p.key.b.values, p.value.W.values, p.value.b.values, dk, dk, width,
                                          p.scale_scores);
    close(r.context.value().values, o.context, "attention context");
    close(r.weights.value().values, o.weights, "attention weights");
  }

  return {c.failures == 0, std::to_string(instances) + " instances each of conv2d_same, pool2d, lstm_cell_step, "
                               "self_attention_forward; max abs diff " + fmt("%.2e", worst) + "; " + c.summary()};
}

Outcome structural_invariants() {
  Checker c;
  Rng rng(77);
  double worst_row = 0.0;
  auto rows_sum_to_one = [&](const Vec& m, std::size_t rows, std::size_t cols, const char* what) {
    for (std::size_t r = 0; r < rows; ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < cols; ++j) s += m[r * cols + j];
      worst_row = std::max(worst_row, std::abs(s - 1.0));
      c.expect(std::abs(s - 1.0) <= 1e-9, std::string(what) + " row sum " + fmt("%.17g", s));
    }
  };

  for (int i = 0; i < 100; ++i) {
    const std::size_t rows = 1 + rng.below(6), cols = 1 + rng.below(10);
    Tensor<double> x({rows, cols});
    const double scale = std::pow(10.0, rng.uniform(-2.0, 2.5));
    for (auto& v : x.values) v = rng.uniform(-scale, scale);
    Tape<double> tape;
    rows_sum_to_one(ops::softmax(tape.constant(x)).value().values, rows, cols, "softmax");

    const std::size_t T = 1 + rng.below(10), d = 1 + rng.below(6);
    auto p = init_self_attention<double>(d, 1 + rng.below(5), i % 2 ? 256 : 1 + rng.below(2 * T), Rng(rng.next_u64()));
    for (auto* t : {&p.query.W, &p.query.b, &p.key.W, &p.key.b}) fill(*t, rng);
    Tensor<double> seq({T, d});
    fill(seq, rng);
    rows_sum_to_one(self_attention_forward(p, tape.constant(seq)).weights.value().values, T, T, "attention");
  }

  // feature_reshape round-trips the 4x4x128 backbone map for every factorization of 2048.
  Tensor<double> fmap({4, 4, 128});
  fill(fmap, rng);
  std::size_t factorizations = 0;
  for (std::size_t seq_len = 1; seq_len <= 2048; seq_len *= 2) {
    Tape<double> tape;
    auto r = feature_reshape(tape.constant(fmap), seq_len, 2048 / seq_len);
    c.expect(r.shape() == Shape{seq_len, 2048 / seq_len}, "reshape shape");
    c.expect(ops::reshape(r, Shape{4, 4, 128}).value().values == fmap.values,
             "reshape round-trip at seq_len " + std::to_string(seq_len));
    ++factorizations;
  }

  // BiLSTM reversal duality: reversing the input and swapping the two cells
  // mirrors the output in time and swaps its halves.
  for (int i = 0; i < 25; ++i) {
    const std::size_t T = 1 + rng.below(8), in = 1 + rng.below(5), hid = 1 + rng.below(5);
    auto p = init_bilstm<double>(in, hid, Rng(rng.next_u64()));
    for (auto* cell : {&p.forward_cell, &p.backward_cell})
      for (auto* t : {&cell->W_i, &cell->W_f, &cell->W_o, &cell->W_g, &cell->b_i, &cell->b_f, &cell->b_o, &cell->b_g})
        fill(*t, rng);
    Tensor<double> seq({T, in}), rev({T, in});
    fill(seq, rng);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t j = 0; j < in; ++j) rev.values[t * in + j] = seq.values[(T - 1 - t) * in + j];
    BiLstmParams<double> swapped{p.backward_cell, p.forward_cell};
    Tape<double> tape;
    const Vec a = bilstm_forward(p, tape.constant(rev)).value().values;
    const Vec b = bilstm_forward(swapped, tape.constant(seq)).value().values;
    bool exact = true;
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t j = 0; j < hid; ++j) {
        exact &= a[t * 2 * hid + j] == b[(T - 1 - t) * 2 * hid + hid + j];
        exact &= a[t * 2 * hid + hid + j] == b[(T - 1 - t) * 2 * hid + j];
      }
    c.expect(exact, "bilstm duality");
  }

  // Full-size CnnBilstmAttn with a 1 x 2048 sequence: the attention map is [[1]].
  ModelConfig cfg;
  cfg.seq_len = 1;
  cfg.feat_dim = 2048;
  auto model = build_model<float>(cfg, Rng(5));
  for (int i = 0; i < 3; ++i) {
    Tensor<float> img({96, 96, 3});
    for (auto& v : img.values) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    Tape<float> tape;
    const auto out = model_forward(tape, model, img, Mode::Eval, Rng(0));
    c.expect(out.attention.has_value() && out.attention->shape() == Shape{1, 1} &&
                 out.attention->value().values[0] == 1.0f,
             "seq_len 1 attention map is not [[1]]");
  }

  return {c.failures == 0, "max |row sum - 1| " + fmt("%.2e", worst_row) + ", " + std::to_string(factorizations) +
                               " reshape factorizations, 25 duality cases, seq_len 1 map; " + c.summary()};
}

Outcome synthetic_convergence() {
  const auto t0 = Clock::now();
  const Manifest m = load_manifest(synthetic_manifest());
  TrainConfig tc;  // lr 1e-4, decay 1e-6, lambda 0.01, dropout 0.5
  tc.max_epochs = 30;
  const DatasetSplit split = split_dataset(m.entries, 65, tc.seed);
  std::size_t first_95 = 0;
  double best_train = 0.0;
  auto res = train(ModelConfig{}, tc, split, m.base_dir, [&](const EpochRecord& r) {
    best_train = std::max(best_train, r.train_accuracy);
    if (first_95 == 0 && r.train_accuracy >= 0.95) first_95 = r.epoch;
  });
  const Evaluation test = evaluate(res.best.params, load_samples(split.test, m.base_dir));
  const double test_acc = test.metrics.accuracy().value_or(0.0);
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = split.train.size() == 65 && split.test.size() == 29 && first_95 != 0 && first_95 <= 30 &&
           test_acc >= 0.90 && secs < 600.0;
  o.detail = "train acc >= 0.95 first at epoch " + (first_95 ? std::to_string(first_95) : std::string("never")) +
             " (max " + fmt("%.4f", best_train) + " over " + std::to_string(res.history.size()) +
             " epochs), test acc " + fmt("%.4f", test_acc) + " on " + std::to_string(split.test.size()) +
             " images (best checkpoint, epoch " + std::to_string(res.best_epoch) + "), " + fmt("%.1f", secs) + " s";
  return o;
}

// Lines of the table that follows `heading` in an ablation report, up to a blank line.
std::vector<std::string> table_after(const std::string& report, const std::string& heading) {
  std::vector<std::string> rows;
  const auto at = report.find(heading);
  if (at == std::string::npos) return rows;
  std::istringstream is(report.substr(at));
  std::string line;
  std::getline(is, line);  // heading
  std::getline(is, line);  // column header
  while (std::getline(is, line) && !line.empty()) rows.push_back(line);
  return rows;
}

Outcome ablation_fidelity() {
  Checker c;
  ScratchDir dir("acceptance_ablation");
  write_text(dir / "ab.cfg", "data.manifest = " + synthetic_manifest().string() +
                                 "\ntrain.max_epochs = 2\nout_dir = " + (dir / "ab").string() + "\n");
  const CliRun r = cli({"ablation", "--config", (dir / "ab.cfg").string()});
  c.expect(r.code == 0, "ablation exit " + std::to_string(r.code) + ": " + r.err);
  const std::string report = r.code == 0 ? read_text(dir / "ab/ablation.txt") : std::string();
  const auto rows = table_after(report, "Test set");
  c.expect(rows.size() == 3, "test table has " + std::to_string(rows.size()) + " rows");
  for (const char* v : {"CnnOnly", "CnnLstm", "CnnBilstmAttn"}) {
    const fs::path ev_dir = dir / ("eval_" + std::string(v));
    const CliRun e = cli({"eval", "--checkpoint", (dir / "ab" / v / "model.csq").string(), "--manifest",
                          (dir / "ab/test.csv").string(), "--out", ev_dir.string()});
    c.expect(e.code == 0, std::string("eval ") + v + " exit " + std::to_string(e.code));
    if (e.code != 0) continue;
    const std::string table = read_text(ev_dir / "metrics.txt");
    std::string row = table.substr(table.find('\n') + 1);
    row = row.substr(0, row.find('\n'));
    c.expect(std::find(rows.begin(), rows.end(), row) != rows.end(), std::string("row mismatch for ") + v);
  }

  // Metric formulas against a brute-force recount of random prediction logs.
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = rng.below(80);
    const double p_pos = rng.uniform(), p_flip = rng.uniform();
    Metrics m;
    std::vector<std::pair<int, int>> log;
    for (std::size_t j = 0; j < n; ++j) {
      const int truth = rng.uniform() < p_pos, pred = rng.uniform() < p_flip ? 1 - truth : truth;
      m.add(truth, pred);
      log.emplace_back(truth, pred);
    }
    std::size_t correct = 0, pos = 0, neg = 0, pos_hit = 0, neg_hit = 0;
    for (auto [t, p] : log) {
      correct += t == p;
      (t ? pos : neg) += 1;
      (t ? pos_hit : neg_hit) += t == p;
    }
    auto ratio = [](std::size_t a, std::size_t b) -> std::optional<double> {
      if (b == 0) return std::nullopt;
      return static_cast<double>(a) / static_cast<double>(b);
    };
    c.expect(m.tp == pos_hit && m.fn == pos - pos_hit && m.tn == neg_hit && m.fp == neg - neg_hit, "counts");
    c.expect(m.accuracy() == ratio(correct, n), "accuracy");
    c.expect(m.sensitivity() == ratio(pos_hit, pos), "sensitivity");
    c.expect(m.specificity() == ratio(neg_hit, neg), "specificity");
  }
  return {c.failures == 0, "3-row report, cells equal eval recomputation, 1000 random logs; " + c.summary()};
}

Outcome determinism() {
  Checker c;
  ScratchDir dir("acceptance_determinism");
  const std::string base = "data.manifest = " + synthetic_manifest().string() + "\ntrain.max_epochs = 3\nseed = 11\n";
  for (const char* run : {"a", "b"}) {
    write_text(dir / (std::string(run) + ".cfg"), base + "out_dir = " + (dir / run).string() + "\n");
    const CliRun r = cli({"train", "--config", (dir / (std::string(run) + ".cfg")).string()});
    c.expect(r.code == 0, std::string("train ") + run + " exit " + std::to_string(r.code) + ": " + r.err);
  }
  for (const char* f : {"model.csq", "curves.csv", "misclassified.csv"}) {
    const bool both = fs::exists(dir / "a" / f) && fs::exists(dir / "b" / f);
    c.expect(both && read_file(dir / "a" / f) == read_file(dir / "b" / f), std::string(f) + " differs");
  }
  return {c.failures == 0, "two seeded train runs (default model, 3 epochs): checkpoint, curves, misclassified "
                           "bitwise equal; " + c.summary()};
}

Outcome persistence() {
  Checker c;
  ScratchDir dir("acceptance_persistence");
  Checkpoint ck{build_model<float>(ModelConfig{}, Rng(21)), std::nullopt, 21, 0};
  auto named = ck.params.named();
  ck.adam = AdamState<float>::for_params(named);
  Rng rng(31);
  for (auto& t : ck.adam->m)
    for (auto& v : t.values) v = static_cast<float>(rng.uniform(-1, 1));
  ck.adam->step = ck.step = 40;
  save_checkpoint(ck, dir / "m.csq");
  Checkpoint back = load_checkpoint(dir / "m.csq");

  auto back_named = back.params.named();
  bool bitwise = back.params.config == ck.params.config && back_named.size() == named.size();
  for (std::size_t i = 0; bitwise && i < named.size(); ++i) {
    const auto& a = named[i].tensor->values;
    const auto& b = back_named[i].tensor->values;
    bitwise = named[i].path == back_named[i].path && a.size() == b.size() &&
              std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
  }
  c.expect(bitwise, "parameters differ after reload");
  c.expect(encode_checkpoint(back) == encode_checkpoint(ck) && encode_checkpoint(back) == read_file(dir / "m.csq"),
           "re-encoding differs");

  for (int i = 0; i < 10; ++i) {
    Tensor<float> img({96, 96, 3});
    for (auto& v : img.values) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    const Prediction a = predict(ck.params, img), b = predict(back.params, img);
    c.expect(a.label == b.label && a.prob_ischemic == b.prob_ischemic, "prediction differs on input " + std::to_string(i));
  }

  const auto bytes = read_file(dir / "m.csq");
  auto rejects = [&](std::vector<std::uint8_t> bad, const std::string& what) {
    write_file_atomic(dir / "bad.csq", std::string(bad.begin(), bad.end()));
    try {
      load_checkpoint(dir / "bad.csq");
      c.expect(false, what + " accepted");
    } catch (const FormatError&) {
      c.expect(true, what);
    } catch (const std::exception& e) {
      c.expect(false, what + " raised a non-format error: " + e.what());
    }
  };
  auto magic = bytes;
  magic[1] ^= 0x20;
  rejects(magic, "bad magic");
  auto version = bytes;
  version[4] = 9;
  rejects(version, "bad version");
  for (std::size_t cut : {std::size_t{0}, std::size_t{2}, std::size_t{7}, bytes.size() / 3, bytes.size() - 1})
    rejects({bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut)}, "truncated at " + std::to_string(cut));
  auto trailing = bytes;
  trailing.push_back(0);
  rejects(trailing, "trailing bytes");
  Checkpoint mismatched{build_model<float>(ModelConfig::tiny(Variant::CnnOnly), Rng(1)), std::nullopt, 1, 0};
  mismatched.params.config = ModelConfig::tiny(Variant::CnnBilstmAttn);
  rejects(encode_checkpoint(mismatched), "shape-table mismatch");
  try {
    load_checkpoint(dir / "absent.csq");
    c.expect(false, "missing file accepted");
  } catch (const DataError&) {
    c.expect(true, "missing file");
  }
  return {c.failures == 0, "bitwise round-trip, 10 reloaded predictions equal, corrupt files rejected; " + c.summary()};
}

Outcome optimizer_regularizer() {
  Checker c;
  Rng rng(5);
  // 10-step Adam trace on a vector parameter against the scalar oracle.
  const std::size_t n = 16;
  Tensor<double> p({n});
  fill(p, rng);
  std::vector<oracle::ScalarAdam> scalar(n);
  Vec theta = p.values;
  std::vector<ParamRef<double>> params{{"p", &p, true}};
  auto state = AdamState<double>::for_params(params);
  double worst = 0.0;
  for (std::uint64_t step = 1; step <= 10; ++step) {
    p.ensure_grad();
    const double lr = effective_lr(1e-3, 1e-6, step - 1);
    for (std::size_t i = 0; i < n; ++i) {
      const double g = rng.uniform(-2.0, 2.0);
      p.grad[i] = g;
      theta[i] = scalar[i].step(theta[i], g, lr);
    }
    adam_step(state, params, lr);
    worst = std::max(worst, oracle::max_abs_diff(p.values, theta));
  }
  c.expect(worst <= 1e-15, "adam trace diff " + fmt("%.3g", worst));

  // L2 contribution on the tiny model's weights: 2 lambda theta; biases untouched.
  auto model = build_model<double>(ModelConfig::tiny(Variant::CnnBilstmAttn), Rng(6));
  auto named = model.named();
  for (auto& ref : named) fill(*ref.tensor, rng);
  const double lambda = 0.01;
  Tape<double> tape;
  tape.backward(l2_penalty(tape, named, lambda));
  double l2_worst = 0.0;
  std::size_t weights = 0;
  for (auto& ref : named) {
    if (!ref.is_weight) {
      c.expect(!ref.tensor->has_grad(), ref.path + " got an L2 gradient");
      continue;
    }
    ++weights;
    for (std::size_t i = 0; i < ref.tensor->numel(); ++i)
      l2_worst = std::max(l2_worst, std::abs(ref.tensor->grad[i] - 2.0 * lambda * ref.tensor->values[i]));
  }
  c.expect(l2_worst <= 1e-10, "l2 gradient diff " + fmt("%.3g", l2_worst));

  for (double lr : {1e-4, 1e-3, 0.5, 3.0})
    c.expect(effective_lr(lr, 1e-6, 1000000) == lr / 2.0, "effective_lr at 1e6 for lr " + fmt("%g", lr));
  c.expect(effective_lr(1e-4, 1e-6, 0) == 1e-4, "effective_lr at step 0");

  return {c.failures == 0, "adam 10-step max diff " + fmt("%.2e", worst) + ", L2 max diff " + fmt("%.2e", l2_worst) +
                               " over " + std::to_string(weights) + " weight tensors, lr halves at 1e6; " +
                               c.summary()};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"oracle equivalence", oracle_equivalence},
      {"structural invariants", structural_invariants},
      {"synthetic convergence", synthetic_convergence},
      {"ablation harness fidelity", ablation_fidelity},
      {"determinism", determinism},
      {"persistence", persistence},
      {"optimizer and regularizer", optimizer_regularizer},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "criterion " << i + 1 << " " << criteria[i].first << ": " << (o.pass ? "PASS" : "FAIL") << " ("
              << o.detail << ")" << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed;
}
