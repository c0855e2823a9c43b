#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cardionet/metrics.hpp"
#include "cardionet/train.hpp"

namespace cardionet {

// Curves CSV: epoch,train_loss,train_accuracy,val_loss,val_accuracy
// (absent validation values are empty fields; reals printed with %.17g).
std::string curves_csv(const std::vector<EpochRecord>& records);
std::vector<EpochRecord> parse_curves_csv(const std::string& text);

// Misclassified CSV: path,true_label,predicted_label,prob_ischemic
std::string misclassified_csv(const std::vector<PredictionRecord>& rows);

struct MetricsRow {
  std::string model;
  Metrics metrics;
};

/// Plain-text table with columns Model, Accuracy, Sensitivity, Specificity
/// (percent, 2 decimals, "n/a" when undefined) followed by raw TP/FN/TN/FP.
std::string metrics_table(const std::vector<MetricsRow>& rows);

/// Writes curves.csv, metrics.txt (`notes` followed by the table) and
/// misclassified.csv into `out_dir`, creating it if needed.
void emit_reports(const std::filesystem::path& out_dir, const std::vector<EpochRecord>& records,
                  const std::vector<MetricsRow>& metrics, const std::vector<PredictionRecord>& misclassified,
                  const std::string& notes = {});

}  // namespace cardionet
