#include "cardionet/model.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "cardionet/errors.hpp"

namespace cardionet {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::CnnOnly: return "CnnOnly";
    case Variant::CnnLstm: return "CnnLstm";
    case Variant::CnnBilstmAttn: return "CnnBilstmAttn";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  if (name == "CnnOnly") return Variant::CnnOnly;
  if (name == "CnnLstm") return Variant::CnnLstm;
  if (name == "CnnBilstmAttn") return Variant::CnnBilstmAttn;
  throw ConfigError("unknown model variant '" + std::string(name) + "' (expected CnnOnly, CnnLstm or CnnBilstmAttn)");
}

BackboneSpec ModelConfig::default_backbone() {
  BackboneSpec b;
  b.stem_channels = 16;
  b.stem_kernel = 3;
  b.stem_stride = 2;
  b.blocks = {{8, 8, 8}, {16, 16, 16}, {32, 48, 48}};
  b.pools = {{kernels::PoolKind::Max, 2, 2}, {kernels::PoolKind::Max, 2, 2}, {kernels::PoolKind::Avg, 3, 3}};
  return b;
}

ModelConfig ModelConfig::tiny(Variant v) {
  ModelConfig c;
  c.variant = v;
  c.input_size = 12;
  c.backbone.stem_channels = 4;
  c.backbone.stem_kernel = 3;
  c.backbone.stem_stride = 2;
  c.backbone.blocks = {{2, 2, 2}};
  c.backbone.pools = {{kernels::PoolKind::Avg, 3, 3}};
  c.feature_dim = 24;
  c.seq_len = 4;
  c.feat_dim = 6;
  c.lstm_hidden = 4;
  c.attention_dim = 4;
  c.ff_hidden = 4;
  return c;
}

Shape ModelConfig::backbone_output_shape() const {
  const auto& b = backbone;
  std::size_t h = (input_size + b.stem_stride - 1) / b.stem_stride;
  std::size_t w = h;
  std::size_t c = b.stem_channels;
  for (std::size_t i = 0; i < b.blocks.size(); ++i) {
    c = b.blocks[i].out_channels();
    if (i < b.pools.size() && b.pools[i].window > 0) {
      const auto& p = b.pools[i];
      if (p.window > h || p.window > w)
        throw ConfigError("pool after block " + std::to_string(i + 1) + " has window " + std::to_string(p.window) +
                          " larger than its " + std::to_string(h) + "x" + std::to_string(w) + " input");
      h = (h - p.window) / p.stride + 1;
      w = (w - p.window) / p.stride + 1;
    }
  }
  return {h, w, c};
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("invalid model config: " + m); };
  if (num_classes != 2) fail("num_classes must be 2");
  if (input_size == 0 || input_channels == 0) fail("input dimensions must be positive");
  if (backbone.stem_kernel % 2 == 0) fail("stem kernel must be odd");
  if (backbone.stem_stride == 0 || backbone.stem_channels == 0) fail("stem stride and channels must be positive");
  if (backbone.blocks.empty()) fail("backbone needs at least one inception block");
  if (backbone.pools.size() != backbone.blocks.size()) fail("need one pool stage (or none) per inception block");
  for (const auto& blk : backbone.blocks)
    if (blk.c1 == 0 || blk.c3 == 0 || blk.c5 == 0) fail("inception branch channel counts must be positive");
  for (const auto& p : backbone.pools)
    if (p.window > 0 && p.stride == 0) fail("pool stride must be positive");
  const Shape out = backbone_output_shape();
  if (shape_numel(out) != feature_dim)
    fail("backbone produces " + shape_str(out) + " = " + std::to_string(shape_numel(out)) +
         " features but feature_dim is " + std::to_string(feature_dim));
  if (seq_len == 0 || feat_dim == 0 || seq_len * feat_dim != feature_dim)
    fail("seq_len x feat_dim (" + std::to_string(seq_len) + " x " + std::to_string(feat_dim) +
         ") must equal feature_dim " + std::to_string(feature_dim));
  if (lstm_hidden == 0 || attention_dim == 0 || ff_hidden == 0) fail("layer widths must be positive");
  if (attention_width == 0) fail("attention_width must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout must be in [0, 1)");
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string pool_text(const PoolStage& p) {
  if (p.window == 0) return "none";
  return std::string(p.kind == kernels::PoolKind::Max ? "max" : "avg") + std::to_string(p.window) + "/" +
         std::to_string(p.stride);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError("model config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  return out;
}

PoolStage parse_pool(const std::string& key, const std::string& v) {
  if (v == "none") return {};
  PoolStage p;
  if (v.rfind("max", 0) == 0) {
    p.kind = kernels::PoolKind::Max;
  } else if (v.rfind("avg", 0) == 0) {
    p.kind = kernels::PoolKind::Avg;
  } else {
    throw ConfigError("model config key '" + key + "': bad pool stage '" + v + "'");
  }
  const auto parts = split(v.substr(3), '/');
  if (parts.size() != 2) throw ConfigError("model config key '" + key + "': bad pool stage '" + v + "'");
  p.window = to_size(key, parts[0]);
  p.stride = to_size(key, parts[1]);
  return p;
}

}  // namespace

std::string ModelConfig::to_text() const {
  std::ostringstream os;
  os << "model.variant = " << variant_name(variant) << '\n';
  os << "model.input_size = " << input_size << '\n';
  os << "model.input_channels = " << input_channels << '\n';
  os << "model.stem = " << backbone.stem_channels << ':' << backbone.stem_kernel << ':' << backbone.stem_stride << '\n';
  os << "model.blocks = ";
  for (std::size_t i = 0; i < backbone.blocks.size(); ++i) {
    const auto& b = backbone.blocks[i];
    os << (i ? ";" : "") << b.c1 << ',' << b.c3 << ',' << b.c5;
  }
  os << '\n' << "model.pools = ";
  for (std::size_t i = 0; i < backbone.pools.size(); ++i) os << (i ? ";" : "") << pool_text(backbone.pools[i]);
  os << '\n';
  os << "model.feature_dim = " << feature_dim << '\n';
  os << "model.seq_len = " << seq_len << '\n';
  os << "model.feat_dim = " << feat_dim << '\n';
  os << "model.lstm_hidden = " << lstm_hidden << '\n';
  os << "model.attention_dim = " << attention_dim << '\n';
  os << "model.attention_width = " << attention_width << '\n';
  os << "model.attention_scale = " << (attention_scale ? 1 : 0) << '\n';
  os << "model.ff_hidden = " << ff_hidden << '\n';
  os << "model.dropout = " << fmt_double(dropout_rate) << '\n';
  os << "model.num_classes = " << num_classes << '\n';
  return os.str();
}

ModelConfig ModelConfig::from_text(std::string_view text) {
  ModelConfig c;
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("model config line " + std::to_string(lineno) + ": missing '='");
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    if (key == "model.variant") {
      c.variant = parse_variant(val);
    } else if (key == "model.input_size") {
      c.input_size = to_size(key, val);
    } else if (key == "model.input_channels") {
      c.input_channels = to_size(key, val);
    } else if (key == "model.stem") {
      const auto parts = split(val, ':');
      if (parts.size() != 3) throw ConfigError("model.stem must be channels:kernel:stride");
      c.backbone.stem_channels = to_size(key, parts[0]);
      c.backbone.stem_kernel = to_size(key, parts[1]);
      c.backbone.stem_stride = to_size(key, parts[2]);
    } else if (key == "model.blocks") {
      c.backbone.blocks.clear();
      for (const auto& b : split(val, ';')) {
        const auto ch = split(b, ',');
        if (ch.size() != 3) throw ConfigError("model.blocks entries must be c1,c3,c5");
        c.backbone.blocks.push_back({to_size(key, ch[0]), to_size(key, ch[1]), to_size(key, ch[2])});
      }
    } else if (key == "model.pools") {
      c.backbone.pools.clear();
      for (const auto& p : split(val, ';')) c.backbone.pools.push_back(parse_pool(key, p));
    } else if (key == "model.feature_dim") {
      c.feature_dim = to_size(key, val);
    } else if (key == "model.seq_len") {
      c.seq_len = to_size(key, val);
    } else if (key == "model.feat_dim") {
      c.feat_dim = to_size(key, val);
    } else if (key == "model.lstm_hidden") {
      c.lstm_hidden = to_size(key, val);
    } else if (key == "model.attention_dim") {
      c.attention_dim = to_size(key, val);
    } else if (key == "model.attention_width") {
      c.attention_width = to_size(key, val);
    } else if (key == "model.attention_scale") {
      c.attention_scale = to_size(key, val) != 0;
    } else if (key == "model.ff_hidden") {
      c.ff_hidden = to_size(key, val);
    } else if (key == "model.dropout") {
      c.dropout_rate = std::stod(val);
    } else if (key == "model.num_classes") {
      c.num_classes = to_size(key, val);
    } else {
      throw ConfigError("model config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  return c;
}

template <typename T>
std::vector<ParamRef<T>> ModelParams<T>::named() {
  std::vector<ParamRef<T>> out;
  stem.collect("backbone/stem", out);
  for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].collect("backbone/block" + std::to_string(i + 1), out);
  if (lstm) lstm->collect("lstm", out);
  if (bilstm) bilstm->collect("bilstm", out);
  if (attention) attention->collect("attention", out);
  feed_forward.collect("head/feed_forward", out);
  classifier.collect("head/classifier", out);
  return out;
}

template <typename T>
std::size_t ModelParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : const_cast<ModelParams*>(this)->named()) n += p.tensor->numel();
  return n;
}

template <typename T>
ModelParams<T> build_model(const ModelConfig& cfg, const Rng& rng) {
  cfg.validate();
  ModelParams<T> p;
  p.config = cfg;
  const auto& b = cfg.backbone;
  const Rng bb = rng.substream("backbone");
  p.stem = init_conv<T>(b.stem_kernel, cfg.input_channels, b.stem_channels, b.stem_stride, bb.substream("stem"));
  std::size_t channels = b.stem_channels;
  for (std::size_t i = 0; i < b.blocks.size(); ++i) {
    const auto& s = b.blocks[i];
    p.blocks.push_back(init_inception<T>(channels, s.c1, s.c3, s.c5, bb.substream("block", {i})));
    channels = s.out_channels();
  }
  std::size_t head_in = cfg.feature_dim;
  switch (cfg.variant) {
    case Variant::CnnOnly:
      break;
    case Variant::CnnLstm:
      p.lstm = init_lstm_cell<T>(cfg.feat_dim, cfg.lstm_hidden, rng.substream("lstm"));
      head_in = cfg.lstm_hidden;
      break;
    case Variant::CnnBilstmAttn:
      p.bilstm = init_bilstm<T>(cfg.feat_dim, cfg.lstm_hidden, rng.substream("bilstm"));
      p.attention = init_self_attention<T>(2 * cfg.lstm_hidden, cfg.attention_dim, cfg.attention_width,
                                           rng.substream("attention"));
      p.attention->scale_scores = cfg.attention_scale;
      head_in = cfg.attention_dim;
      break;
  }
  p.feed_forward = init_dense<T>(head_in, cfg.ff_hidden, ops::Activation::Tanh, rng.substream("feed_forward"));
  p.classifier = init_dense<T>(cfg.ff_hidden, cfg.num_classes, ops::Activation::None, rng.substream("classifier"));
  return p;
}

template <typename To, typename From>
ModelParams<To> convert_params(const ModelParams<From>& src) {
  ModelParams<To> dst = build_model<To>(src.config, Rng(0));
  auto s = const_cast<ModelParams<From>&>(src).named();
  auto d = dst.named();
  for (std::size_t i = 0; i < s.size(); ++i) *d[i].tensor = tensor_cast<To>(*s[i].tensor);
  return dst;
}

template <typename T>
Var<T> feature_reshape(Var<T> fmap, std::size_t seq_len, std::size_t feat_dim) {
  if (fmap.numel() != seq_len * feat_dim)
    throw DimensionError("feature_reshape: " + shape_str(fmap.shape()) + " has " + std::to_string(fmap.numel()) +
                         " elements, cannot form " + std::to_string(seq_len) + "x" + std::to_string(feat_dim));
  return ops::reshape(fmap, Shape{seq_len, feat_dim});
}

template <typename T>
ForwardOutput<T> model_forward(Tape<T>& tape, ModelParams<T>& p, const Tensor<T>& image, Mode mode, const Rng& rng) {
  const ModelConfig& cfg = p.config;
  const Shape expected{cfg.input_size, cfg.input_size, cfg.input_channels};
  if (image.shape != expected)
    throw DimensionError("model expects an image of shape " + shape_str(expected) + ", got " + shape_str(image.shape));
  const DropoutSpec drop{cfg.dropout_rate, mode};
  std::uint64_t site = 0;
  auto dropout = [&](Var<T> v) { return dropout_forward(v, drop, rng.substream("dropout", {site++})); };

  Var<T> x = ops::tanh(conv_forward(p.stem, tape.constant(image)));
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    x = inception_block_forward(p.blocks[i], x);
    const auto& pool = cfg.backbone.pools[i];
    if (pool.window > 0) x = ops::pool2d(x, pool.kind, pool.window, pool.stride);
  }
  x = dropout(x);

  ForwardOutput<T> out;
  Var<T> rep;
  switch (cfg.variant) {
    case Variant::CnnOnly:
      rep = feature_reshape(x, 1, cfg.feature_dim);
      break;
    case Variant::CnnLstm: {
      const Var<T> seq = dropout(feature_reshape(x, cfg.seq_len, cfg.feat_dim));
      rep = dropout(lstm_scan(*p.lstm, seq, false).back());
      break;
    }
    case Variant::CnnBilstmAttn: {
      const Var<T> seq = dropout(feature_reshape(x, cfg.seq_len, cfg.feat_dim));
      const Var<T> hidden = dropout(bilstm_forward(*p.bilstm, seq));
      const auto attn = self_attention_forward(*p.attention, hidden);
      rep = dropout(ops::mean_rows(attn.context));
      out.attention = attn.weights;
      break;
    }
  }
  const Var<T> logits = dense_forward(p.classifier, dense_forward(p.feed_forward, rep));
  out.probs = ops::softmax(logits);
  return out;
}

Prediction prediction_from_probs(double p0, double p1) { return {p1 > p0 ? 1 : 0, p1}; }

template <typename T>
Prediction predict(ModelParams<T>& p, const Tensor<T>& image) {
  Tape<T> tape;
  const auto out = model_forward(tape, p, image, Mode::Eval, Rng(0));
  const auto& v = out.probs.value().values;
  return prediction_from_probs(static_cast<double>(v[0]), static_cast<double>(v[1]));
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template ModelParams<float> build_model<float>(const ModelConfig&, const Rng&);
template ModelParams<double> build_model<double>(const ModelConfig&, const Rng&);
template ModelParams<double> convert_params<double, float>(const ModelParams<float>&);
template ModelParams<float> convert_params<float, double>(const ModelParams<double>&);
template Var<float> feature_reshape<float>(Var<float>, std::size_t, std::size_t);
template Var<double> feature_reshape<double>(Var<double>, std::size_t, std::size_t);
template ForwardOutput<float> model_forward<float>(Tape<float>&, ModelParams<float>&, const Tensor<float>&, Mode,
                                                   const Rng&);
template ForwardOutput<double> model_forward<double>(Tape<double>&, ModelParams<double>&, const Tensor<double>&,
                                                     Mode, const Rng&);
template Prediction predict<float>(ModelParams<float>&, const Tensor<float>&);
template Prediction predict<double>(ModelParams<double>&, const Tensor<double>&);

}  // namespace cardionet
