#include "cardionet/optim.hpp"

#include <cmath>

#include "cardionet/errors.hpp"
#include "cardionet/ops.hpp"

namespace cardionet {

template <typename T>
AdamState<T> AdamState<T>::for_params(const std::vector<ParamRef<T>>& params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.tensor->shape);
    s.v.emplace_back(p.tensor->shape);
  }
  return s;
}

double effective_lr(double base_lr, double decay, std::uint64_t step) {
  return base_lr / (1.0 + decay * static_cast<double>(step));
}

template <typename T>
void adam_step(AdamState<T>& state, const std::vector<ParamRef<T>>& params, double lr) {
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw DimensionError("adam_step: optimizer state has " + std::to_string(state.m.size()) + " slots for " +
                         std::to_string(params.size()) + " parameters");
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Tensor<T>& p = *params[k].tensor;
    if (state.m[k].shape != p.shape || state.v[k].shape != p.shape)
      throw DimensionError("adam_step: state shape " + shape_str(state.m[k].shape) + " vs parameter " +
                           params[k].path + " " + shape_str(p.shape));
    if (p.has_grad() && !all_finite(std::span<const T>(p.grad)))
      throw NumericError("adam_step", "gradient of " + params[k].path);
  }
  state.step += 1;
  const T b1 = static_cast<T>(state.beta1);
  const T b2 = static_cast<T>(state.beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(state.beta1, static_cast<double>(state.step)));
  const T c2 = static_cast<T>(1.0 - std::pow(state.beta2, static_cast<double>(state.step)));
  const T eps = static_cast<T>(state.epsilon);
  const T step_size = static_cast<T>(lr);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor<T>& p = *params[k].tensor;
    if (!p.has_grad()) p.ensure_grad();
    T* m = state.m[k].values.data();
    T* v = state.v[k].values.data();
    for (std::size_t i = 0; i < p.numel(); ++i) {
      const T g = p.grad[i];
      m[i] = b1 * m[i] + (T(1) - b1) * g;
      v[i] = b2 * v[i] + (T(1) - b2) * g * g;
      const T m_hat = m[i] / c1;
      const T v_hat = v[i] / c2;
      p.values[i] -= step_size * m_hat / (std::sqrt(v_hat) + eps);
    }
    p.zero_grad();
  }
}

template <typename T>
Var<T> l2_penalty(Tape<T>& tape, const std::vector<ParamRef<T>>& params, double lambda) {
  if (lambda < 0.0) throw ConfigError("l2 lambda must be >= 0");
  if (lambda == 0.0) return tape.constant(Tensor<T>(Shape{1}));
  Var<T> total;
  for (const auto& p : params) {
    if (!p.is_weight) continue;
    const Var<T> sq = ops::sum_squares(tape.param(*p.tensor));
    total = total.attached() ? ops::add(total, sq) : sq;
  }
  if (!total.attached()) return tape.constant(Tensor<T>(Shape{1}));
  return ops::scale(total, static_cast<T>(lambda));
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step<float>(AdamState<float>&, const std::vector<ParamRef<float>>&, double);
template void adam_step<double>(AdamState<double>&, const std::vector<ParamRef<double>>&, double);
template Var<float> l2_penalty<float>(Tape<float>&, const std::vector<ParamRef<float>>&, double);
template Var<double> l2_penalty<double>(Tape<double>&, const std::vector<ParamRef<double>>&, double);

}  // namespace cardionet
