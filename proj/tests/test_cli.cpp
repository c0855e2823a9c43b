#include <doctest.h>

#include <sstream>

#include "cardionet/checkpoint.hpp"
#include "cardionet/data.hpp"
#include "cardionet/errors.hpp"
#include "cardionet/image_io.hpp"
#include "cardionet/reports.hpp"
#include "cardionet/run_config.hpp"
#include "cardionet/synthetic.hpp"
#include "cli.hpp"
#include "test_util.hpp"

using namespace cardionet;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "cardionet");
  std::vector<const char*> argv;
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Small synthetic dataset shared by the CLI tests (built once).
const fs::path& dataset() {
  static ScratchDir dir("cli_data");
  static const fs::path manifest = [] {
    SyntheticSpec spec;
    spec.smooth_count = 6;
    spec.high_frequency_count = 6;
    return write_synthetic_dataset(dir.path(), spec);
  }();
  return manifest;
}

void write_config(const fs::path& path, const std::string& extra) {
  write_text(path, "# quick run\ndata.manifest = " + dataset().string() +
                       "\ndata.train_count = 8\ntrain.max_epochs = 1\ntrain.batch_size = 4\n" + extra);
}

Metrics recount(const std::string& misclassified_csv, std::size_t n_total, const Metrics& printed) {
  // Errors come from the CSV; correct predictions fill up the remaining counts.
  Metrics m;
  std::istringstream is(misclassified_csv);
  std::string line;
  std::getline(is, line);
  std::size_t wrong = 0;
  while (std::getline(is, line)) {
    const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
    m.add(std::stoi(line.substr(c1 + 1)), std::stoi(line.substr(c2 + 1)));
    ++wrong;
  }
  const std::size_t positives = printed.tp + printed.fn;
  m.tp = positives - m.fn;
  m.tn = n_total - wrong - m.tp;
  return m;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("run config parsing") {
    const RunConfig d = parse_run_config("", "/base");
    CHECK(d.train.learning_rate == 1e-4);
    CHECK(d.train.decay == 1e-6);
    CHECK(d.train.l2_lambda == 0.01);
    CHECK(d.train.dropout_rate == 0.5);
    CHECK(d.train_count == 65);
    CHECK(d.model == ModelConfig{});

    const RunConfig c = parse_run_config(
        "# comment\nmodel.variant = CnnLstm\nmodel.seq_len = 64\ntrain.learning_rate = 0.001\n"
        "data.manifest = data/m.csv\nseed = 9\n  out_dir = /abs/out  \n",
        "/base");
    CHECK(c.model.variant == Variant::CnnLstm);
    CHECK(c.model.seq_len == 64);
    CHECK(c.model.feat_dim == 32);
    CHECK(c.train.learning_rate == 0.001);
    CHECK(c.manifest == fs::path("/base/data/m.csv"));
    CHECK(c.out_dir == fs::path("/abs/out"));
    CHECK(c.seed() == 9);

    try {
      parse_run_config("seed = 1\n\nmodel.colour = red\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("model.colour") != std::string::npos);
      CHECK(msg.find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_run_config("seed = -1\n"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("train.batch_size = 4x\n"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("no equals sign\n"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("seed = 1\nseed = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("model.seq_len = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("model.seq_len = 2\nmodel.feat_dim = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("train.dropout = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("model.variant = Transformer\n"), ConfigError);
    CHECK(run_config_keys().size() == 16);
  }

  TEST_CASE("help documents flags, keys and defaults") {
    auto h = cli({"train", "--help"});
    CHECK(h.code == 0);
    for (const char* s : {"--config", "--seed", "--out", "train.learning_rate", "0.0001", "1e-06", "0.01", "0.5",
                          "data.train_count", "65", "model.attention_width", "256"})
      CHECK(h.out.find(s) != std::string::npos);
    for (const char* cmd : {"eval", "predict", "gradcheck", "ablation", "synth", "augment"}) {
      auto r = cli({cmd, "--help"});
      CHECK(r.code == 0);
      CHECK(r.out.find("Usage") != std::string::npos);
    }
    CHECK(cli({}).code == 2);
    CHECK(cli({"train"}).code == 2);
    CHECK(cli({"gradcheck", "--module", "nonsense"}).code == 2);
  }

  TEST_CASE("train, eval and predict") {
    ScratchDir dir("cli_train");
    write_config(dir / "run.cfg", "out_dir = out\n");
    auto t = cli({"train", "--config", (dir / "run.cfg").string()});
    INFO(t.err);
    REQUIRE(t.code == 0);
    for (const char* f : {"model.csq", "curves.csv", "metrics.txt", "misclassified.csv", "train.csv", "test.csv"})
      CHECK(fs::exists(dir / ("out/" + std::string(f))));
    CHECK(read_text(dir / "out/metrics.txt").find("best epoch") != std::string::npos);
    CHECK(read_text(dir / "out/metrics.txt").find("final epoch") != std::string::npos);

    // Same invocation into another directory: identical bytes.
    auto t2 = cli({"train", "--config", (dir / "run.cfg").string(), "--out", (dir / "out2").string()});
    REQUIRE(t2.code == 0);
    for (const char* f : {"model.csq", "curves.csv", "metrics.txt", "misclassified.csv"})
      CHECK(read_file(dir / ("out/" + std::string(f))) == read_file(dir / ("out2/" + std::string(f))));
    auto t3 = cli({"train", "--config", (dir / "run.cfg").string(), "--out", (dir / "out3").string(), "--seed", "2"});
    REQUIRE(t3.code == 0);
    CHECK(read_file(dir / "out/model.csq") != read_file(dir / "out3/model.csq"));

    const std::string ckpt = (dir / "out/model.csq").string();
    auto e = cli({"eval", "--checkpoint", ckpt, "--manifest", (dir / "out/test.csv").string(), "--out",
                  (dir / "ev").string()});
    REQUIRE(e.code == 0);
    CHECK(e.out.find("Sensitivity") != std::string::npos);
    CHECK(e.out.find("TP=") != std::string::npos);
    // Printed counts agree with a recount from misclassified.csv.
    Metrics printed;
    std::sscanf(e.out.substr(e.out.find("TP=")).c_str(), "TP=%zu FN=%zu TN=%zu FP=%zu", &printed.tp, &printed.fn,
                &printed.tn, &printed.fp);
    CHECK(printed.total() == 4);
    CHECK(recount(read_text(dir / "ev/misclassified.csv"), 4, printed) == printed);
    // cmd_train's test table equals cmd_eval's.
    CHECK(read_text(dir / "out/metrics.txt").find(read_text(dir / "ev/metrics.txt")) != std::string::npos);

    // predict agrees with evaluate for the same image.
    const Manifest test = load_manifest(dir / "out/test.csv");
    const Checkpoint ck = load_checkpoint(ckpt);
    auto params = ck.params;
    const auto ev = evaluate(params, load_samples(test.entries, test.base_dir));
    for (std::size_t i = 0; i < test.entries.size(); ++i) {
      auto p = cli({"predict", "--checkpoint", ckpt, "--image", test.resolve(test.entries[i]).string()});
      REQUIRE(p.code == 0);
      int label = -1;
      float prob = -1;
      REQUIRE(std::sscanf(p.out.c_str(), "label=%d prob_ischemic=%f", &label, &prob) == 2);
      CHECK(p.out.back() == '\n');
      CHECK(label == ev.log[i].predicted_label);
      CHECK(prob == static_cast<float>(ev.log[i].prob_ischemic));
    }
  }

  TEST_CASE("error exit codes") {
    ScratchDir dir("cli_err");
    write_text(dir / "bad.cfg", "seed = 1\nfoo.bar = 2\n");
    auto r = cli({"train", "--config", (dir / "bad.cfg").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("foo.bar") != std::string::npos);
    CHECK(r.err.find("line 2") != std::string::npos);
    CHECK(cli({"train", "--config", (dir / "absent.cfg").string()}).code == 2);

    write_config(dir / "nan.cfg", "train.learning_rate = 1e30\nout_dir = o\n");
    auto n = cli({"train", "--config", (dir / "nan.cfg").string()});
    CHECK(n.code == 3);
    CHECK(n.err.find("numeric") != std::string::npos);

    // Checkpoint for 12x12 inputs against 96x96 images.
    Checkpoint tiny{build_model<float>(ModelConfig::tiny(Variant::CnnOnly), Rng(1)), std::nullopt, 1, 0};
    save_checkpoint(tiny, dir / "tiny.csq");
    CHECK(cli({"eval", "--checkpoint", (dir / "tiny.csq").string(), "--manifest", dataset().string(), "--out",
               (dir / "e").string()})
              .code == 2);

    write_config(dir / "ok.cfg", "out_dir = ok\n");
    REQUIRE(cli({"train", "--config", (dir / "ok.cfg").string()}).code == 0);
    Rgb8Image small{32, 32, std::vector<std::uint8_t>(32 * 32 * 3, 9)};
    write_png(dir / "small.png", small);
    auto p = cli({"predict", "--checkpoint", (dir / "ok/model.csq").string(), "--image", (dir / "small.png").string()});
    CHECK(p.code == 2);
    CHECK(p.err.find("dimension") != std::string::npos);

    auto bytes = read_file(dir / "ok/model.csq");
    bytes[1] = 'Z';
    write_file_atomic(dir / "corrupt.csq", bytes);
    CHECK(cli({"predict", "--checkpoint", (dir / "corrupt.csq").string(), "--image", (dir / "small.png").string()}).code ==
          2);
  }

  TEST_CASE("gradcheck command") {
    auto ok = cli({"gradcheck", "--module", "layers"});
    CHECK(ok.code == 0);
    CHECK(ok.out.find("layers/lstm_cell_step") != std::string::npos);
    CHECK(cli({"gradcheck", "--module", "layers"}).out == ok.out);

    auto bad = cli({"gradcheck", "--module", "model", "--inject-fault", "softmax"});
    CHECK(bad.code == 1);
    CHECK(bad.out.find("faulty op(s): softmax") != std::string::npos);
    auto bad2 = cli({"gradcheck", "--module", "ops", "--inject-fault", "conv2d"});
    CHECK(bad2.code == 1);
    CHECK(bad2.out.find("conv2d k3 s1") != std::string::npos);
    // The fault hook is cleared afterwards.
    CHECK(cli({"gradcheck", "--module", "ops"}).code == 0);
  }

  TEST_CASE("ablation command") {
    ScratchDir dir("cli_ablation");
    write_config(dir / "ab.cfg", "out_dir = ab\n");
    auto r = cli({"ablation", "--config", (dir / "ab.cfg").string()});
    INFO(r.err);
    REQUIRE(r.code == 0);
    const std::string report = read_text(dir / "ab/ablation.txt");
    for (const char* v : {"CnnOnly", "CnnLstm", "CnnBilstmAttn"}) {
      CHECK(fs::exists(dir / ("ab/" + std::string(v) + "/model.csq")));
      auto e = cli({"eval", "--checkpoint", (dir / ("ab/" + std::string(v) + "/model.csq")).string(), "--manifest",
                    (dir / "ab/test.csv").string(), "--out", (dir / ("ev_" + std::string(v))).string()});
      REQUIRE(e.code == 0);
      const std::string table = read_text(dir / ("ev_" + std::string(v) + "/metrics.txt"));
      const std::string row = table.substr(table.find('\n') + 1);
      CHECK(report.find(row) != std::string::npos);
    }
    // One split hash, logged once per variant.
    std::size_t pos = 0, count = 0;
    const std::string hash_line = r.out.substr(r.out.find("split "), 23);
    while ((pos = r.out.find(hash_line, pos)) != std::string::npos) ++count, ++pos;
    CHECK(count == 3);
  }

  TEST_CASE("synth and augment commands") {
    ScratchDir dir("cli_synth");
    auto s = cli({"synth", "--out", (dir / "d").string(), "--smooth", "2", "--high", "3", "--raw"});
    REQUIRE(s.code == 0);
    const Manifest m = load_manifest(dir / "d/manifest.csv");
    CHECK(m.entries.size() == 5);
    CHECK(load_image(m.resolve(m.entries[0])).shape == Shape{96, 96, 3});
    auto a = cli({"augment", "--manifest", (dir / "d/manifest.csv").string(), "--out", (dir / "aug").string(),
                  "--copies", "2"});
    REQUIRE(a.code == 0);
    const Manifest am = load_manifest(dir / "aug/manifest.csv");
    CHECK(am.entries.size() == 10);
    CHECK(load_image(am.resolve(am.entries[3])).shape == Shape{96, 96, 3});
  }
}
