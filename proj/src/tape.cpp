#include "cardionet/tape.hpp"

#include "cardionet/errors.hpp"

namespace cardionet {

namespace testing {
namespace {
std::string& fault_slot() {
  static std::string op;
  return op;
}
}  // namespace
void set_backward_fault(std::string op) { fault_slot() = std::move(op); }
const std::string& backward_fault() { return fault_slot(); }
}  // namespace testing

template <typename T>
const Tensor<T>& Var<T>::value() const {
  if (!tape) throw ContractError("detached Var has no tape");
  return tape->value(id);
}

template <typename T>
Var<T> Tape<T>::constant(Tensor<T> value) {
  Node n;
  n.op = "constant";
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

template <typename T>
Var<T> Tape<T>::leaf(Tensor<T> value) {
  Node n;
  n.op = "leaf";
  n.owned = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

template <typename T>
Var<T> Tape<T>::param(Tensor<T>& p) {
  if (auto it = param_ids_.find(&p); it != param_ids_.end()) return {this, it->second};
  Node n;
  n.op = "param";
  n.external = &p;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  param_ids_.emplace(&p, nodes_.size() - 1);
  return {this, nodes_.size() - 1};
}

template <typename T>
Var<T> Tape<T>::record(std::string op, Tensor<T> value, std::vector<std::size_t> inputs, BackwardFn fn) {
  if (!all_finite(std::span<const T>(value.values))) throw NumericError(op, "output " + shape_str(value.shape));
  Node n;
  n.op = std::move(op);
  n.owned = std::move(value);
  for (auto i : inputs) n.requires_grad = n.requires_grad || nodes_.at(i).requires_grad;
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

template <typename T>
std::vector<T>& Tape<T>::grad(std::size_t id) {
  Tensor<T>& t = nodes_.at(id).tensor();
  t.ensure_grad();
  return t.grad;
}

template <typename T>
void Tape<T>::backward(Var<T> loss) {
  if (!loss.attached()) throw ContractError("backward: loss is detached (no tape)");
  if (loss.tape != this) throw ContractError("backward: loss belongs to a different tape");
  if (backward_done_) throw ContractError("backward: already called on this tape; reset() first");
  const Tensor<T>& lv = value(loss.id);
  if (lv.numel() != 1) throw ContractError("backward: loss must be scalar, got " + shape_str(lv.shape));
  backward_done_ = true;
  if (!nodes_[loss.id].requires_grad) return;
  grad(loss.id)[0] += T(1);
  const std::string& fault = testing::backward_fault();
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward) continue;
    Tensor<T>& t = n.tensor();
    if (!t.has_grad()) continue;
    if (!fault.empty() && n.op == fault)
      for (auto& g : t.grad) g *= T(1.5);
    n.backward(*this, i);
  }
}

template <typename T>
void Tape<T>::reset() {
  nodes_.clear();
  param_ids_.clear();
  backward_done_ = false;
}

template struct Var<float>;
template struct Var<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace cardionet
