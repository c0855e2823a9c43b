#include "cardionet/run_config.hpp"

#include <charconv>
#include <set>

#include "cardionet/errors.hpp"
#include "cardionet/fileio.hpp"

namespace cardionet {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

struct LineError {
  std::string key;
  std::size_t line;
  [[noreturn]] void fail(const std::string& why) const {
    throw ConfigError("line " + std::to_string(line) + ": key '" + key + "': " + why);
  }
};

std::size_t to_count(std::string_view v, const LineError& at) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) at.fail("expected a non-negative integer, got '" + std::string(v) + "'");
  return out;
}

std::uint64_t to_u64(std::string_view v, const LineError& at) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) at.fail("expected a non-negative integer, got '" + std::string(v) + "'");
  return out;
}

double to_real(std::string_view v, const LineError& at) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) at.fail("expected a number, got '" + std::string(v) + "'");
  return out;
}

}  // namespace

const std::vector<RunConfigKey>& run_config_keys() {
  static const std::vector<RunConfigKey> keys = {
      {"model.variant", "CnnBilstmAttn", "CnnOnly | CnnLstm | CnnBilstmAttn"},
      {"model.seq_len", "1", "rows of the reshaped 2048 feature vector"},
      {"model.feat_dim", "2048", "columns of the reshaped feature vector (seq_len x feat_dim = 2048)"},
      {"model.lstm_hidden", "128", "LSTM units per direction"},
      {"model.attention_width", "256", "attention band width"},
      {"train.learning_rate", "0.0001", "Adam base learning rate"},
      {"train.decay", "1e-06", "lr_t = lr / (1 + decay * step)"},
      {"train.l2_lambda", "0.01", "L2 penalty on weights"},
      {"train.dropout", "0.5", "dropout rate"},
      {"train.batch_size", "8", "samples per step"},
      {"train.max_epochs", "50", "epoch budget"},
      {"train.patience", "10", "epochs without train-loss improvement before stopping"},
      {"data.manifest", "(required)", "path,label CSV; relative to the config file"},
      {"data.train_count", "65", "images in the training split"},
      {"seed", "1", "master seed for split, init, augmentation and dropout"},
      {"out_dir", "run", "output directory; relative to the config file"},
  };
  return keys;
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  RunConfig rc;
  std::optional<std::size_t> seq_len, feat_dim;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value', got '" + std::string(line) + "'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const LineError at{key, line_no};
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (!seen.insert(key).second) at.fail("duplicate key");
    if (value.empty()) at.fail("empty value");

    if (key == "model.variant") {
      try {
        rc.model.variant = parse_variant(value);
      } catch (const ConfigError& e) {
        at.fail(e.what());
      }
    } else if (key == "model.seq_len") {
      seq_len = to_count(value, at);
    } else if (key == "model.feat_dim") {
      feat_dim = to_count(value, at);
    } else if (key == "model.lstm_hidden") {
      rc.model.lstm_hidden = to_count(value, at);
    } else if (key == "model.attention_width") {
      rc.model.attention_width = to_count(value, at);
    } else if (key == "train.learning_rate") {
      rc.train.learning_rate = to_real(value, at);
    } else if (key == "train.decay") {
      rc.train.decay = to_real(value, at);
    } else if (key == "train.l2_lambda") {
      rc.train.l2_lambda = to_real(value, at);
    } else if (key == "train.dropout") {
      rc.train.dropout_rate = to_real(value, at);
    } else if (key == "train.batch_size") {
      rc.train.batch_size = to_count(value, at);
    } else if (key == "train.max_epochs") {
      rc.train.max_epochs = to_count(value, at);
    } else if (key == "train.patience") {
      rc.train.patience = to_count(value, at);
    } else if (key == "data.manifest") {
      rc.manifest = base_dir / std::filesystem::path(std::string(value));
    } else if (key == "data.train_count") {
      rc.train_count = to_count(value, at);
    } else if (key == "seed") {
      rc.train.seed = to_u64(value, at);
    } else if (key == "out_dir") {
      rc.out_dir = base_dir / std::filesystem::path(std::string(value));
    } else {
      at.fail("unknown key");
    }
  }

  // Either half of the reshape determines the other.
  const std::size_t total = rc.model.feature_dim;
  if (seq_len && !feat_dim) {
    if (*seq_len == 0 || total % *seq_len != 0)
      throw ConfigError("model.seq_len = " + std::to_string(*seq_len) + " does not divide " + std::to_string(total));
    feat_dim = total / *seq_len;
  } else if (feat_dim && !seq_len) {
    if (*feat_dim == 0 || total % *feat_dim != 0)
      throw ConfigError("model.feat_dim = " + std::to_string(*feat_dim) + " does not divide " + std::to_string(total));
    seq_len = total / *feat_dim;
  }
  if (seq_len) rc.model.seq_len = *seq_len;
  if (feat_dim) rc.model.feat_dim = *feat_dim;
  if (rc.out_dir.is_relative()) rc.out_dir = base_dir / rc.out_dir;
  rc.model.dropout_rate = rc.train.dropout_rate;
  rc.model.validate();
  rc.train.validate();
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_run_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                          path.parent_path());
}

}  // namespace cardionet
