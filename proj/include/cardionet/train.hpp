#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cardionet/checkpoint.hpp"
#include "cardionet/data.hpp"
#include "cardionet/metrics.hpp"

namespace cardionet {

struct TrainConfig {
  double learning_rate = 1e-4;
  double decay = 1e-6;
  double l2_lambda = 0.01;
  double dropout_rate = 0.5;
  std::size_t batch_size = 8;
  std::size_t max_epochs = 50;
  std::size_t patience = 10;
  double min_improvement = 1e-4;
  std::uint64_t seed = 1;
  AugmentationConfig augmentation;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> val_loss;
  std::optional<double> val_accuracy;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainResult {
  Checkpoint best;   // lowest train loss
  Checkpoint final;  // state after the last epoch
  std::size_t best_epoch = 0;  // 0 = initial parameters
  std::vector<EpochRecord> history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Per epoch: augment -> forward (train mode) -> mean cross-entropy + L2 ->
/// backward -> Adam, with train loss/accuracy accumulated on the fly and the
/// validation set (if any) scored in eval mode. Stops at max_epochs or when
/// train loss fails to improve by min_improvement for `patience` epochs.
/// The dropout rate of `model_cfg` is replaced by `cfg.dropout_rate`.
TrainResult train_on_samples(const ModelConfig& model_cfg, const TrainConfig& cfg, const std::vector<Sample>& train,
                             const std::vector<Sample>& validation, const EpochCallback& on_epoch = {});

/// Loads the split's images (paths relative to `manifest_dir`) and trains,
/// validating on split.test.
TrainResult train(const ModelConfig& model_cfg, const TrainConfig& cfg, const DatasetSplit& split,
                  const std::filesystem::path& manifest_dir, const EpochCallback& on_epoch = {});

std::vector<Sample> load_samples(const std::vector<ManifestEntry>& entries, const std::filesystem::path& base_dir);

struct PredictionRecord {
  std::string path;
  int true_label = 0;
  int predicted_label = 0;
  double prob_ischemic = 0.0;
};

struct Evaluation {
  Metrics metrics;
  double mean_loss = 0.0;
  std::vector<PredictionRecord> log;           // input order
  std::vector<PredictionRecord> misclassified;  // most confident mistakes first
};

Evaluation evaluate(ModelParams<float>& params, const std::vector<Sample>& samples);
/// Throws DimensionError if the checkpoint's input size is not 96x96x3.
Evaluation evaluate(const Checkpoint& ckpt, const Manifest& manifest);

}  // namespace cardionet
