#include "cardionet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <sstream>

#include "cardionet/errors.hpp"
#include "cardionet/fileio.hpp"

namespace cardionet {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'C', 'S', 'Q', '1'};
constexpr std::uint8_t kDtypeF32 = 1;

class Writer {
 public:
  template <typename U>
  void put(U v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(U));
  }
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void str(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void tensor(const std::string& name, const Tensor<float>& t) {
    str(name);
    put(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape) put(static_cast<std::uint32_t>(d));
    put(kDtypeF32);
    bytes(t.values.data(), t.values.size() * sizeof(float));
  }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  template <typename U>
  U get() {
    need(sizeof(U));
    U v;
    std::memcpy(&v, b_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return v;
  }
  std::string str() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::pair<std::string, Tensor<float>> tensor() {
    std::string name = str();
    const auto rank = get<std::uint32_t>();
    if (rank == 0 || rank > 8) throw FormatError("checkpoint tensor '" + name + "' has invalid rank " + std::to_string(rank));
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) {
      const auto d = get<std::uint32_t>();
      if (d == 0) throw FormatError("checkpoint tensor '" + name + "' has a zero dimension");
      shape.push_back(d);
    }
    const auto dtype = get<std::uint8_t>();
    if (dtype != kDtypeF32) throw FormatError("checkpoint tensor '" + name + "' has unsupported dtype " + std::to_string(dtype));
    const std::size_t n = shape_numel(shape);
    need(n * sizeof(float));
    std::vector<float> values(n);
    std::memcpy(values.data(), b_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
    return {std::move(name), Tensor<float>(std::move(shape), std::move(values))};
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw FormatError("checkpoint is truncated");
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  auto& params = const_cast<ModelParams<float>&>(ckpt.params);
  const auto named = params.named();
  Writer w;
  w.bytes(kMagic, 4);
  w.put(kCheckpointVersion);
  std::string text = params.config.to_text();
  text += "checkpoint.seed = " + std::to_string(ckpt.seed) + "\n";
  text += "checkpoint.step = " + std::to_string(ckpt.step) + "\n";
  w.str(text);
  w.put(static_cast<std::uint32_t>(named.size()));
  for (const auto& p : named) w.tensor(p.path, *p.tensor);
  if (ckpt.adam) {
    const auto& a = *ckpt.adam;
    if (a.m.size() != named.size() || a.v.size() != named.size())
      throw DimensionError("checkpoint: optimizer state does not match the parameter list");
    w.put(static_cast<std::uint32_t>(2 * named.size()));
    for (std::size_t i = 0; i < named.size(); ++i) w.tensor("adam/m/" + named[i].path, a.m[i]);
    for (std::size_t i = 0; i < named.size(); ++i) w.tensor("adam/v/" + named[i].path, a.v[i]);
    w.put(static_cast<std::uint64_t>(a.step));
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("not a checkpoint (bad magic)");
  r.get<std::uint32_t>();
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));

  std::istringstream text(r.str());
  std::string line, model_text;
  Checkpoint ckpt;
  auto number = [](const std::string& l) {
    try {
      return static_cast<std::uint64_t>(std::stoull(l.substr(l.find('=') + 1)));
    } catch (const std::exception&) {
      throw FormatError("checkpoint config block has a malformed line '" + l + "'");
    }
  };
  while (std::getline(text, line)) {
    if (line.rfind("checkpoint.seed", 0) == 0)
      ckpt.seed = number(line);
    else if (line.rfind("checkpoint.step", 0) == 0)
      ckpt.step = number(line);
    else
      model_text += line + "\n";
  }
  ModelConfig cfg;
  try {
    cfg = ModelConfig::from_text(model_text);
    ckpt.params = build_model<float>(cfg, Rng(0));
  } catch (const std::exception& e) {
    throw FormatError(std::string("checkpoint config block is invalid: ") + e.what());
  }

  auto named = ckpt.params.named();
  const auto count = r.get<std::uint32_t>();
  if (count != named.size())
    throw FormatError("checkpoint has " + std::to_string(count) + " tensors, config implies " +
                      std::to_string(named.size()));
  for (auto& p : named) {
    auto [name, t] = r.tensor();
    if (name != p.path) throw FormatError("checkpoint tensor '" + name + "' where '" + p.path + "' was expected");
    if (t.shape != p.tensor->shape)
      throw FormatError("checkpoint tensor '" + name + "' has shape " + shape_str(t.shape) + ", config implies " +
                        shape_str(p.tensor->shape));
    *p.tensor = std::move(t);
  }
  if (!r.done()) {
    const auto n = r.get<std::uint32_t>();
    if (n != 2 * named.size()) throw FormatError("checkpoint optimizer section has the wrong tensor count");
    AdamState<float> adam;
    for (int half = 0; half < 2; ++half) {
      const std::string prefix = half == 0 ? "adam/m/" : "adam/v/";
      for (auto& p : named) {
        auto [name, t] = r.tensor();
        if (name != prefix + p.path || t.shape != p.tensor->shape)
          throw FormatError("checkpoint optimizer tensor '" + name + "' does not match '" + prefix + p.path + "'");
        (half == 0 ? adam.m : adam.v).push_back(std::move(t));
      }
    }
    adam.step = r.get<std::uint64_t>();
    ckpt.adam = std::move(adam);
    if (!r.done()) throw FormatError("checkpoint has trailing bytes");
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace cardionet
