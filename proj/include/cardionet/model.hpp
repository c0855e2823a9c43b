#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cardionet/layers.hpp"

namespace cardionet {

enum class Variant { CnnOnly, CnnLstm, CnnBilstmAttn };

std::string variant_name(Variant v);
Variant parse_variant(std::string_view name);

struct InceptionSpec {
  std::size_t c1 = 0, c3 = 0, c5 = 0;
  std::size_t out_channels() const { return c1 + c3 + c5; }
  bool operator==(const InceptionSpec&) const = default;
};

/// Pooling applied after an inception block; window 0 means none.
struct PoolStage {
  kernels::PoolKind kind = kernels::PoolKind::Max;
  std::size_t window = 0, stride = 0;
  bool operator==(const PoolStage&) const = default;
};

struct BackboneSpec {
  std::size_t stem_channels = 16;
  std::size_t stem_kernel = 3;
  std::size_t stem_stride = 2;
  std::vector<InceptionSpec> blocks;
  std::vector<PoolStage> pools;  // one per block
  bool operator==(const BackboneSpec&) const = default;
};

struct ModelConfig {
  Variant variant = Variant::CnnBilstmAttn;
  std::size_t input_size = 96;
  std::size_t input_channels = 3;
  BackboneSpec backbone = default_backbone();
  std::size_t feature_dim = 2048;
  std::size_t seq_len = 1;
  std::size_t feat_dim = 2048;
  std::size_t lstm_hidden = 128;
  std::size_t attention_dim = 64;
  std::size_t attention_width = 256;
  bool attention_scale = true;
  std::size_t ff_hidden = 128;
  double dropout_rate = 0.5;
  std::size_t num_classes = 2;

  bool operator==(const ModelConfig&) const = default;

  /// Stem 3x3/2 -> three inception blocks, 2x2 max-pool between them, then a
  /// 3x3 average pool that leaves a 4x4x128 = 2048 feature map at 96x96 input.
  static BackboneSpec default_backbone();
  /// Small configuration (12x12 input, one inception block, hidden 4,
  /// seq_len 4) used by the gradient checks and fast tests.
  static ModelConfig tiny(Variant v);

  /// Throws ConfigError naming the violated constraint.
  void validate() const;
  /// H x W x C after the backbone, derived from the shape formulas.
  Shape backbone_output_shape() const;

  /// Flat `key = value` form, one key per line; the checkpoint config block.
  std::string to_text() const;
  static ModelConfig from_text(std::string_view text);
};

template <typename T>
struct ModelParams {
  ModelConfig config;
  ConvParams<T> stem;
  std::vector<InceptionBlockParams<T>> blocks;
  std::optional<LstmCellParams<T>> lstm;
  std::optional<BiLstmParams<T>> bilstm;
  std::optional<SelfAttentionParams<T>> attention;
  DenseParams<T> feed_forward;
  DenseParams<T> classifier;

  /// Every learnable tensor with its unique path, in a fixed order.
  std::vector<ParamRef<T>> named();
  std::size_t parameter_count() const;
};

template <typename T>
ModelParams<T> build_model(const ModelConfig& cfg, const Rng& rng);

template <typename To, typename From>
ModelParams<To> convert_params(const ModelParams<From>& src);

/// Row-major flatten of an H x W x C map into seq_len x feat_dim.
template <typename T>
Var<T> feature_reshape(Var<T> fmap, std::size_t seq_len, std::size_t feat_dim);

template <typename T>
struct ForwardOutput {
  Var<T> probs;  // 1 x 2
  std::optional<Var<T>> attention;
};

/// `rng` seeds the dropout masks (substream "dropout" indexed by site);
/// ignored in eval mode.
template <typename T>
ForwardOutput<T> model_forward(Tape<T>& tape, ModelParams<T>& p, const Tensor<T>& image, Mode mode,
                               const Rng& rng);

struct Prediction {
  int label = 0;
  double prob_ischemic = 0.0;
};

/// argmax with exact ties resolved to label 0.
Prediction prediction_from_probs(double p0, double p1);

template <typename T>
Prediction predict(ModelParams<T>& p, const Tensor<T>& image);

}  // namespace cardionet
