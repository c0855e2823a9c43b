#include "cardionet/reports.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "cardionet/errors.hpp"
#include "cardionet/fileio.hpp"

namespace cardionet {

namespace {

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string percent(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f %%", *v * 100.0);
  return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> f;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      f.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  f.push_back(cur);
  return f;
}

double parse_real(const std::string& s, std::size_t row) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("curves CSV row " + std::to_string(row) + ": bad number '" + s + "'");
  }
}

}  // namespace

std::string curves_csv(const std::vector<EpochRecord>& records) {
  std::string out = "epoch,train_loss,train_accuracy,val_loss,val_accuracy\n";
  for (const auto& r : records) {
    out += std::to_string(r.epoch) + ',' + real(r.train_loss) + ',' + real(r.train_accuracy) + ',' +
           (r.val_loss ? real(*r.val_loss) : "") + ',' + (r.val_accuracy ? real(*r.val_accuracy) : "") + '\n';
  }
  return out;
}

std::vector<EpochRecord> parse_curves_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || split_fields(line) != std::vector<std::string>{"epoch", "train_loss", "train_accuracy",
                                                                               "val_loss", "val_accuracy"})
    throw FormatError("curves CSV: bad header");
  std::vector<EpochRecord> out;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 5) throw FormatError("curves CSV row " + std::to_string(row) + ": expected 5 fields");
    EpochRecord r;
    r.epoch = static_cast<std::size_t>(parse_real(f[0], row));
    r.train_loss = parse_real(f[1], row);
    r.train_accuracy = parse_real(f[2], row);
    if (!f[3].empty()) r.val_loss = parse_real(f[3], row);
    if (!f[4].empty()) r.val_accuracy = parse_real(f[4], row);
    out.push_back(r);
  }
  return out;
}

std::string misclassified_csv(const std::vector<PredictionRecord>& rows) {
  std::string out = "path,true_label,predicted_label,prob_ischemic\n";
  for (const auto& r : rows)
    out += r.path + ',' + std::to_string(r.true_label) + ',' + std::to_string(r.predicted_label) + ',' +
           real(r.prob_ischemic) + '\n';
  return out;
}

std::string metrics_table(const std::vector<MetricsRow>& rows) {
  std::size_t w = 13;  // longest variant name, so rows line up across reports
  for (const auto& r : rows) w = std::max(w, r.model.size());
  auto pad = [](std::string s, std::size_t n) {
    s.resize(std::max(n, s.size()), ' ');
    return s;
  };
  std::ostringstream os;
  os << pad("Model", w) << "  " << pad("Accuracy", 10) << "  " << pad("Sensitivity", 11) << "  "
     << pad("Specificity", 11) << "  TP  FN  TN  FP\n";
  for (const auto& r : rows) {
    const Metrics& m = r.metrics;
    char counts[64];
    std::snprintf(counts, sizeof counts, "%3zu %3zu %3zu %3zu", m.tp, m.fn, m.tn, m.fp);
    os << pad(r.model, w) << "  " << pad(percent(m.accuracy()), 10) << "  " << pad(percent(m.sensitivity()), 11)
       << "  " << pad(percent(m.specificity()), 11) << " " << counts << '\n';
  }
  return os.str();
}

void emit_reports(const std::filesystem::path& out_dir, const std::vector<EpochRecord>& records,
                  const std::vector<MetricsRow>& metrics, const std::vector<PredictionRecord>& misclassified,
                  const std::string& notes) {
  std::filesystem::create_directories(out_dir);
  write_file_atomic(out_dir / "curves.csv", curves_csv(records));
  write_file_atomic(out_dir / "metrics.txt", notes + metrics_table(metrics));
  write_file_atomic(out_dir / "misclassified.csv", misclassified_csv(misclassified));
}

}  // namespace cardionet
