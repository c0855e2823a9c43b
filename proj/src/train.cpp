#include "cardionet/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cardionet/errors.hpp"
#include "cardionet/image_io.hpp"

namespace cardionet {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
  if (!(decay >= 0.0)) throw ConfigError("train.decay must be >= 0");
  if (!(l2_lambda >= 0.0)) throw ConfigError("train.l2_lambda must be >= 0");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("train.dropout must be in [0, 1)");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (patience < 1) throw ConfigError("train.patience must be >= 1");
  augmentation.validate();
}

std::vector<Sample> load_samples(const std::vector<ManifestEntry>& entries, const std::filesystem::path& base_dir) {
  std::vector<Sample> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back({load_image(base_dir / e.path), e.label, e.path});
  return out;
}

namespace {

int argmax2(const Tensor<float>& probs) {
  return prediction_from_probs(probs.values[0], probs.values[1]).label;
}

struct ValidationScore {
  double loss = 0.0;
  double accuracy = 0.0;
};

ValidationScore score(ModelParams<float>& params, const std::vector<Sample>& samples) {
  double loss = 0.0;
  std::size_t correct = 0;
  for (const auto& s : samples) {
    Tape<float> tape;
    const auto out = model_forward(tape, params, s.pixels, Mode::Eval, Rng(0));
    loss += ops::cross_entropy(out.probs, static_cast<std::size_t>(s.label)).value().values[0];
    correct += argmax2(out.probs.value()) == s.label;
  }
  const double n = static_cast<double>(samples.size());
  return {loss / n, static_cast<double>(correct) / n};
}

}  // namespace

TrainResult train_on_samples(const ModelConfig& model_cfg, const TrainConfig& cfg, const std::vector<Sample>& train,
                             const std::vector<Sample>& validation, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train.empty()) throw DataError("training split is empty");
  ModelConfig mc = model_cfg;
  mc.dropout_rate = cfg.dropout_rate;
  const Rng root(cfg.seed);

  ModelParams<float> params = build_model<float>(mc, root.substream("init"));
  auto named = params.named();
  AdamState<float> adam = AdamState<float>::for_params(named);

  TrainResult result;
  auto snapshot = [&]() { return Checkpoint{params, adam, cfg.seed, adam.step}; };
  result.best = snapshot();
  double best_loss = std::numeric_limits<double>::infinity();
  double patience_ref = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto batches = batch_iter(train.size(), cfg.batch_size, cfg.seed, epoch);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& batch = batches[b];
      try {
        Tape<float> tape;
        Var<float> data_loss;
        for (std::size_t j = 0; j < batch.size(); ++j) {
          const std::size_t idx = batch[j];
          const Sample s = augment(train[idx], cfg.augmentation, root.substream("augment", {idx, epoch}));
          const auto out = model_forward(tape, params, s.pixels, Mode::Train,
                                         root.substream("dropout", {epoch, b, j}));
          const Var<float> ce = ops::cross_entropy(out.probs, static_cast<std::size_t>(s.label));
          data_loss = data_loss.attached() ? ops::add(data_loss, ce) : ce;
          correct += argmax2(out.probs.value()) == s.label;
        }
        data_loss = ops::scale(data_loss, 1.0f / static_cast<float>(batch.size()));
        const Var<float> total = ops::add(data_loss, l2_penalty(tape, named, cfg.l2_lambda));
        loss_sum += static_cast<double>(total.value().values[0]) * static_cast<double>(batch.size());
        tape.backward(total);
        adam_step(adam, named, effective_lr(cfg.learning_rate, cfg.decay, adam.step + 1));
      } catch (const NumericError& e) {
        throw NumericError(e.op(), std::string(e.what()) + " (epoch " + std::to_string(epoch) + ", step " +
                                       std::to_string(adam.step + 1) + ")");
      }
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
    if (!validation.empty()) {
      const auto v = score(params, validation);
      rec.val_loss = v.loss;
      rec.val_accuracy = v.accuracy;
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.train_loss < best_loss) {
      best_loss = rec.train_loss;
      result.best = snapshot();
      result.best_epoch = epoch;
    }
    if (rec.train_loss < patience_ref - cfg.min_improvement) {
      patience_ref = rec.train_loss;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  result.final = snapshot();
  return result;
}

TrainResult train(const ModelConfig& model_cfg, const TrainConfig& cfg, const DatasetSplit& split,
                  const std::filesystem::path& manifest_dir, const EpochCallback& on_epoch) {
  const auto tr = load_samples(split.train, manifest_dir);
  const auto te = load_samples(split.test, manifest_dir);
  return train_on_samples(model_cfg, cfg, tr, te, on_epoch);
}

Evaluation evaluate(ModelParams<float>& params, const std::vector<Sample>& samples) {
  Evaluation ev;
  double loss = 0.0;
  for (const auto& s : samples) {
    Tape<float> tape;
    const auto out = model_forward(tape, params, s.pixels, Mode::Eval, Rng(0));
    const auto& p = out.probs.value().values;
    loss += ops::cross_entropy(out.probs, static_cast<std::size_t>(s.label)).value().values[0];
    const Prediction pred = prediction_from_probs(p[0], p[1]);
    ev.metrics.add(s.label, pred.label);
    ev.log.push_back({s.source_path, s.label, pred.label, pred.prob_ischemic});
  }
  ev.mean_loss = samples.empty() ? 0.0 : loss / static_cast<double>(samples.size());
  for (const auto& r : ev.log)
    if (r.true_label != r.predicted_label) ev.misclassified.push_back(r);
  auto wrong_confidence = [](const PredictionRecord& r) {
    return r.predicted_label == 1 ? r.prob_ischemic : 1.0 - r.prob_ischemic;
  };
  std::stable_sort(ev.misclassified.begin(), ev.misclassified.end(),
                   [&](const auto& a, const auto& b) { return wrong_confidence(a) > wrong_confidence(b); });
  return ev;
}

Evaluation evaluate(const Checkpoint& ckpt, const Manifest& manifest) {
  const ModelConfig& cfg = ckpt.params.config;
  if (cfg.input_size != kPatchSize || cfg.input_channels != 3)
    throw DimensionError("checkpoint expects " + std::to_string(cfg.input_size) + "x" + std::to_string(cfg.input_size) +
                         "x" + std::to_string(cfg.input_channels) + " inputs but manifest images are 96x96x3");
  ModelParams<float> params = ckpt.params;
  return evaluate(params, load_samples(manifest.entries, manifest.base_dir));
}

}  // namespace cardionet
