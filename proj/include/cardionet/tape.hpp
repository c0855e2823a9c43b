#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cardionet/tensor.hpp"

namespace cardionet {

template <typename T>
class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid until the tape
/// is reset or destroyed.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  bool attached() const { return tape != nullptr; }
  const Tensor<T>& value() const;
  const Shape& shape() const { return value().shape; }
  std::size_t numel() const { return value().numel(); }
};

/// Ordered record of forward operations. `backward()` walks the records in
/// exact reverse order, so gradients accumulate in a fixed order and are
/// bitwise reproducible. A tape is confined to one thread at a time.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  struct Node {
    std::string op;
    std::vector<std::size_t> inputs;
    Tensor<T> owned;
    Tensor<T>* external = nullptr;
    bool requires_grad = false;
    BackwardFn backward;

    Tensor<T>& tensor() { return external ? *external : owned; }
    const Tensor<T>& tensor() const { return external ? *external : owned; }
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Input that never receives a gradient.
  Var<T> constant(Tensor<T> value);
  /// Tape-owned input that receives a gradient (read it back via grad()).
  Var<T> leaf(Tensor<T> value);
  /// Parameter living outside the tape; backward accumulates into p.grad.
  /// Registering the same tensor twice returns the same Var.
  Var<T> param(Tensor<T>& p);

  /// Records an op output. Throws NumericError if `value` is not finite.
  Var<T> record(std::string op, Tensor<T> value, std::vector<std::size_t> inputs, BackwardFn fn);

  /// Populates gradients of every differentiable input of a scalar loss.
  /// Throws ContractError for a non-scalar or foreign/detached loss, and on a
  /// second call without reset().
  void backward(Var<T> loss);
  void reset();

  const Tensor<T>& value(std::size_t id) const { return nodes_.at(id).tensor(); }
  const Node& node(std::size_t id) const { return nodes_.at(id); }
  bool needs_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Gradient buffer of a node, allocated (zeroed) on first access.
  std::vector<T>& grad(std::size_t id);
  std::size_t size() const { return nodes_.size(); }
  bool backward_done() const { return backward_done_; }

 private:
  std::deque<Node> nodes_;  // deque: value() references stay valid as nodes are appended
  std::unordered_map<const Tensor<T>*, std::size_t> param_ids_;
  bool backward_done_ = false;
};

namespace testing {
/// Negative-control hook for the gradient checker: while set, the backward
/// rule of every op with this name sees its upstream gradient scaled by 1.5.
/// Empty string disables. Not thread-safe; set it before running anything.
void set_backward_fault(std::string op);
const std::string& backward_fault();
}  // namespace testing

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace cardionet
