#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cardionet {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major array with an optional gradient buffer of the same length.
template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> values;
  std::vector<T> grad;

  Tensor() = default;
  explicit Tensor(Shape s, T fill = T(0));
  Tensor(Shape s, std::vector<T> v);

  std::size_t numel() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }

  std::span<T> data() { return values; }
  std::span<const T> data() const { return values; }

  bool has_grad() const { return !grad.empty(); }
  void ensure_grad();
  void zero_grad();

  T& operator[](std::size_t i) { return values[i]; }
  const T& operator[](std::size_t i) const { return values[i]; }
};

template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& src) {
  Tensor<To> out;
  out.shape = src.shape;
  out.values.assign(src.values.begin(), src.values.end());
  return out;
}

/// A learnable tensor addressed by its hierarchical path, e.g.
/// "backbone/block2/branch3/kernel". `is_weight` is false for biases, which
/// are excluded from L2 regularization.
template <typename T>
struct ParamRef {
  std::string path;
  Tensor<T>* tensor = nullptr;
  bool is_weight = true;
};

bool all_finite(std::span<const float> v);
bool all_finite(std::span<const double> v);

extern template struct Tensor<float>;
extern template struct Tensor<double>;

}  // namespace cardionet
