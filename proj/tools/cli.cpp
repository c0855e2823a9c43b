#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "cardionet/checkpoint.hpp"
#include "cardionet/data.hpp"
#include "cardionet/errors.hpp"
#include "cardionet/fileio.hpp"
#include "cardionet/grad_suite.hpp"
#include "cardionet/image_io.hpp"
#include "cardionet/kernels.hpp"
#include "cardionet/reports.hpp"
#include "cardionet/run_config.hpp"
#include "cardionet/synthetic.hpp"
#include "cardionet/train.hpp"

namespace fs = std::filesystem;

namespace cardionet {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string config_keys_help() {
  std::string s = "Config file keys (key = value, # starts a comment line):\n";
  for (const auto& k : run_config_keys()) {
    std::string key = k.key;
    key.resize(22, ' ');
    std::string def = k.default_value;
    def.resize(16, ' ');
    s += "  " + key + def + k.meaning + "\n";
  }
  return s;
}

EpochCallback epoch_logger(std::ostream& out, const std::string& tag = {}) {
  return [&out, tag](const EpochRecord& r) {
    out << tag << "epoch " << r.epoch << " train_loss=" << fmt("%.6f", r.train_loss)
        << " train_acc=" << fmt("%.4f", r.train_accuracy);
    if (r.val_loss) out << " val_loss=" << fmt("%.6f", *r.val_loss);
    if (r.val_accuracy) out << " val_acc=" << fmt("%.4f", *r.val_accuracy);
    out << '\n' << std::flush;
  };
}

// Split manifests are written next to the run outputs with paths rewritten
// relative to that directory, so `eval --manifest <out>/test.csv` works.
void write_split_manifests(const fs::path& out_dir, const Manifest& m, const DatasetSplit& split) {
  const fs::path base = fs::absolute(out_dir);
  auto rebase = [&](const std::vector<ManifestEntry>& entries) {
    std::vector<ManifestEntry> out;
    for (const auto& e : entries)
      out.push_back({fs::absolute(m.resolve(e)).lexically_normal().lexically_relative(base).generic_string(), e.label});
    return out;
  };
  write_manifest(out_dir / "train.csv", rebase(split.train));
  write_manifest(out_dir / "test.csv", rebase(split.test));
}

std::string epoch_line(const char* what, const TrainResult& r, std::size_t epoch) {
  if (epoch == 0) return std::string(what) + " epoch: 0 (initial parameters)\n";
  const EpochRecord& e = r.history.at(epoch - 1);
  return std::string(what) + " epoch: " + std::to_string(e.epoch) + " train_loss=" + fmt("%.6f", e.train_loss) +
         " train_accuracy=" + fmt("%.2f %%", e.train_accuracy * 100.0) + "\n";
}

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

RunConfig resolve_run(const std::string& config, const std::optional<std::uint64_t>& seed,
                      const std::optional<std::string>& out_dir) {
  RunConfig rc = load_run_config(config);
  if (seed) rc.train.seed = *seed;
  if (out_dir) rc.out_dir = *out_dir;
  if (rc.manifest.empty()) throw ConfigError("config '" + config + "': data.manifest is required");
  return rc;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const RunConfig rc = resolve_run(a.config, a.seed, a.out);
  const Manifest m = load_manifest(rc.manifest);
  const DatasetSplit split = split_dataset(m.entries, rc.train_count, rc.train.seed);
  out << "variant " << variant_name(rc.model.variant) << " split " << split_hash(split) << " train=" << split.train.size()
      << " test=" << split.test.size() << '\n';

  TrainResult result = train(rc.model, rc.train, split, m.base_dir, epoch_logger(out));

  fs::create_directories(rc.out_dir);
  save_checkpoint(result.best, rc.out_dir / "model.csq");
  write_split_manifests(rc.out_dir, m, split);
  ModelParams<float> best = result.best.params;
  const Evaluation ev = evaluate(best, load_samples(split.test, m.base_dir));

  std::string notes = "variant: " + variant_name(rc.model.variant) + "\nsplit: " + split_hash(split) + " (train " +
                      std::to_string(split.train.size()) + ", test " + std::to_string(split.test.size()) + ", seed " +
                      std::to_string(rc.train.seed) + ")\n";
  notes += epoch_line("best", result, result.best_epoch);
  notes += epoch_line("final", result, result.history.size());
  notes += "train values are measured on the fly (augmentation and dropout active)\n\n";
  notes += "Test set, best checkpoint (" + std::to_string(ev.metrics.total()) + " images)\n";
  emit_reports(rc.out_dir, result.history, {{variant_name(rc.model.variant), ev.metrics}}, ev.misclassified, notes);
  out << metrics_table({{variant_name(rc.model.variant), ev.metrics}});
  out << "wrote " << (rc.out_dir / "model.csq").string() << '\n';
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint, manifest, out = ".";
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const Manifest m = load_manifest(a.manifest);
  const Evaluation ev = evaluate(ckpt, m);
  const std::string table = metrics_table({{variant_name(ckpt.params.config.variant), ev.metrics}});
  out << table;
  const Metrics& c = ev.metrics;
  out << "TP=" << c.tp << " FN=" << c.fn << " TN=" << c.tn << " FP=" << c.fp << " n=" << c.total() << '\n';
  fs::create_directories(a.out);
  write_file_atomic(fs::path(a.out) / "metrics.txt", table);
  write_file_atomic(fs::path(a.out) / "misclassified.csv", misclassified_csv(ev.misclassified));
  return kExitOk;
}

struct PredictArgs {
  std::string checkpoint, image;
};

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const ModelConfig& cfg = ckpt.params.config;
  if (cfg.input_size != kPatchSize || cfg.input_channels != 3)
    throw DimensionError("checkpoint expects " + std::to_string(cfg.input_size) + "x" +
                         std::to_string(cfg.input_size) + " inputs; images are 96x96");
  const Prediction p = predict(ckpt.params, load_image(a.image));
  out << "label=" << p.label << " prob_ischemic=" << fmt("%.9g", p.prob_ischemic) << '\n';
  return kExitOk;
}

struct GradArgs {
  std::string module = "all";
  std::string fault;
};

int cmd_gradcheck(const GradArgs& a, std::ostream& out) {
  struct FaultGuard {
    explicit FaultGuard(const std::string& op) { testing::set_backward_fault(op); }
    ~FaultGuard() { testing::set_backward_fault(""); }
  } guard(a.fault);

  const auto entries = run_grad_suite(a.module);
  std::vector<const GradSuiteEntry*> failed;
  for (const auto& e : entries) {
    std::string name = e.group + "/" + e.component;
    name.resize(std::max<std::size_t>(name.size(), 42), ' ');
    out << name << " max_rel_err=" << fmt("%.3e", e.result.max_relative_error) << "  worst=" << e.result.worst_path
        << "[" << e.result.worst_index << "]" << (e.passed() ? "" : "  FAIL") << '\n';
    if (!e.passed()) failed.push_back(&e);
  }
  if (failed.empty()) {
    out << "gradcheck passed: " << entries.size() << " components below " << fmt("%g", kGradTolerance) << '\n';
    return kExitOk;
  }
  for (const auto* e : failed)
    out << "FAILED " << e->group << "/" << e->component << ": parameter " << e->result.worst_path << "["
        << e->result.worst_index << "] rel_err=" << fmt("%.3e", e->result.max_relative_error) << '\n';
  // Name the primitive: the op suite isolates every differentiable op.
  std::vector<std::string> ops_failed;
  if (a.module == "all" || a.module == "ops") {
    for (const auto* e : failed)
      if (e->group == "ops") ops_failed.push_back(e->component);
  } else {
    for (const auto& e : run_grad_suite("ops"))
      if (!e.passed()) ops_failed.push_back(e.component);
  }
  if (!ops_failed.empty()) {
    out << "faulty op(s):";
    for (const auto& op : ops_failed) out << " " << op;
    out << '\n';
  }
  return kExitVerificationFailed;
}

struct AblationArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

int cmd_ablation(const AblationArgs& a, std::ostream& out) {
  const RunConfig rc = resolve_run(a.config, a.seed, a.out);
  const Manifest m = load_manifest(rc.manifest);
  const DatasetSplit split = split_dataset(m.entries, rc.train_count, rc.train.seed);
  fs::create_directories(rc.out_dir);
  write_split_manifests(rc.out_dir, m, split);
  const auto train_samples = load_samples(split.train, m.base_dir);
  const auto test_samples = load_samples(split.test, m.base_dir);

  std::vector<MetricsRow> train_rows, test_rows;
  std::string notes;
  for (Variant v : {Variant::CnnOnly, Variant::CnnLstm, Variant::CnnBilstmAttn}) {
    const std::string name = variant_name(v);
    ModelConfig mc = rc.model;
    mc.variant = v;
    out << "variant " << name << " split " << split_hash(split) << '\n' << std::flush;
    TrainResult result = train_on_samples(mc, rc.train, train_samples, test_samples, epoch_logger(out, name + " "));
    const fs::path dir = rc.out_dir / name;
    ModelParams<float> best = result.best.params;
    const Evaluation ev_train = evaluate(best, train_samples);
    const Evaluation ev_test = evaluate(best, test_samples);
    emit_reports(dir, result.history, {{name, ev_test.metrics}}, ev_test.misclassified);
    save_checkpoint(result.best, dir / "model.csq");
    train_rows.push_back({name, ev_train.metrics});
    test_rows.push_back({name, ev_test.metrics});
    notes += name + " " + epoch_line("best", result, result.best_epoch);
  }

  std::string report = "split: " + split_hash(split) + " (train " + std::to_string(split.train.size()) + ", test " +
                       std::to_string(split.test.size()) + ", seed " + std::to_string(rc.train.seed) + ")\n" + notes +
                       "\nTraining set, best checkpoint, eval mode\n" + metrics_table(train_rows) +
                       "\nTest set, best checkpoint, eval mode\n" + metrics_table(test_rows);
  write_file_atomic(rc.out_dir / "ablation.txt", report);
  out << '\n' << report;
  return kExitOk;
}

struct SynthArgs {
  std::string out;
  SyntheticSpec spec;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const fs::path manifest = write_synthetic_dataset(a.out, a.spec);
  out << "wrote " << (a.spec.smooth_count + a.spec.high_frequency_count) << " images and " << manifest.string()
      << '\n';
  return kExitOk;
}

struct AugmentArgs {
  std::string manifest, out;
  std::size_t copies = 1;
  std::uint64_t seed = 1;
};

std::uint8_t denormalize(float v) {
  const double x = std::round((static_cast<double>(v) + 1.0) * 127.5);
  return static_cast<std::uint8_t>(std::clamp(x, 0.0, 255.0));
}

int cmd_augment(const AugmentArgs& a, std::ostream& out) {
  const Manifest m = load_manifest(a.manifest);
  const AugmentationConfig cfg;
  const Rng root(a.seed);
  fs::create_directories(a.out);
  std::vector<ManifestEntry> written;
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    const Sample s = load_sample(m, i);
    for (std::size_t k = 0; k < a.copies; ++k) {
      const Sample aug = augment(s, cfg, root.substream("augment", {i, k}));
      Rgb8Image img{kPatchSize, kPatchSize, {}};
      img.pixels.reserve(aug.pixels.numel());
      for (float v : aug.pixels.values) img.pixels.push_back(denormalize(v));
      const std::string name =
          fs::path(m.entries[i].path).stem().string() + "_aug" + std::to_string(k) + ".png";
      write_png(fs::path(a.out) / name, img);
      written.push_back({name, s.label});
    }
  }
  write_manifest(fs::path(a.out) / "manifest.csv", written);
  out << "wrote " << written.size() << " augmented images to " << a.out << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"cardionet: CNN, CNN+LSTM and CNN+BiLSTM+attention classifiers for 96x96 H&E patches"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads for the kernels (0 = runtime default)")
      ->capture_default_str();

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Split, train, evaluate on the held-out split, write reports");
  train_cmd->add_option("--config", ta.config, "Run config file")->required();
  train_cmd->add_option("--seed", ta.seed, "Override the config seed (default 1)");
  train_cmd->add_option("--out", ta.out, "Override out_dir");
  train_cmd->footer(config_keys_help() + "Outputs: model.csq curves.csv metrics.txt misclassified.csv train.csv test.csv");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest");
  eval_cmd->add_option("--checkpoint", ea.checkpoint, "Checkpoint (.csq)")->required();
  eval_cmd->add_option("--manifest", ea.manifest, "path,label CSV")->required();
  eval_cmd->add_option("--out", ea.out, "Directory for metrics.txt and misclassified.csv")->capture_default_str();

  PredictArgs pa;
  auto* predict_cmd = app.add_subcommand("predict", "Classify one 96x96 RGB patch (PNG or R96A raw)");
  predict_cmd->add_option("--checkpoint", pa.checkpoint, "Checkpoint (.csq)")->required();
  predict_cmd->add_option("--image", pa.image, "Image file")->required();
  predict_cmd->footer("Prints: label=<0|1> prob_ischemic=<float>; label 1 = ischemic");

  GradArgs ga;
  auto* grad_cmd = app.add_subcommand("gradcheck", "64-bit finite-difference gradient checks");
  grad_cmd->add_option("--module", ga.module, "Suite to run")
      ->check(CLI::IsMember({"all", "ops", "layers", "model"}))
      ->capture_default_str();
  grad_cmd->add_option("--inject-fault", ga.fault, "Scale the backward rule of OP by 1.5 (negative control)")
      ->group("");
  grad_cmd->footer("Central differences, eps = 1e-5; passes iff every relative error < 1e-4");

  AblationArgs aa;
  auto* ablation_cmd = app.add_subcommand("ablation", "Train CnnOnly, CnnLstm and CnnBilstmAttn on one shared split");
  ablation_cmd->add_option("--config", aa.config, "Run config file (model.variant is ignored)")->required();
  ablation_cmd->add_option("--seed", aa.seed, "Override the config seed (default 1)");
  ablation_cmd->add_option("--out", aa.out, "Override out_dir");
  ablation_cmd->footer(config_keys_help() + "Outputs: ablation.txt train.csv test.csv <variant>/{model.csq,curves.csv,...}");

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth", "Generate the two-class synthetic texture dataset");
  synth_cmd->add_option("--out", sa.out, "Output directory")->required();
  synth_cmd->add_option("--smooth", sa.spec.smooth_count, "Smooth (label 0) images")->capture_default_str();
  synth_cmd->add_option("--high", sa.spec.high_frequency_count, "High-frequency (label 1) images")
      ->capture_default_str();
  synth_cmd->add_option("--seed", sa.spec.seed, "Generator seed")->capture_default_str();
  synth_cmd->add_flag("--raw", sa.spec.raw_format, "Write R96A raw files instead of PNG");

  AugmentArgs ga2;
  auto* aug_cmd = app.add_subcommand("augment", "Materialize augmented copies of a manifest as PNGs");
  aug_cmd->add_option("--manifest", ga2.manifest, "path,label CSV")->required();
  aug_cmd->add_option("--out", ga2.out, "Output directory")->required();
  aug_cmd->add_option("--copies", ga2.copies, "Copies per image")->capture_default_str();
  aug_cmd->add_option("--seed", ga2.seed, "Augmentation seed")->capture_default_str();
  aug_cmd->footer("Flips, 90/180/270 rotation and zoom in [0.9, 1.1]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (threads > 0) kernels::set_threads(threads);
    if (*train_cmd) return cmd_train(ta, out);
    if (*eval_cmd) return cmd_eval(ea, out);
    if (*predict_cmd) return cmd_predict(pa, out);
    if (*grad_cmd) return cmd_gradcheck(ga, out);
    if (*ablation_cmd) return cmd_ablation(aa, out);
    if (*synth_cmd) return cmd_synth(sa, out);
    if (*aug_cmd) return cmd_augment(ga2, out);
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DimensionError& e) {
    err << "dimension error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace cardionet
