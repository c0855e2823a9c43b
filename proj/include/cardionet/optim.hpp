#pragma once

#include <cstdint>
#include <vector>

#include "cardionet/tape.hpp"

namespace cardionet {

template <typename T>
struct AdamState {
  std::vector<Tensor<T>> m, v;  // one per parameter, in ParamRef order
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const std::vector<ParamRef<T>>& params);
};

/// base_lr / (1 + decay * step), step >= 1.
double effective_lr(double base_lr, double decay, std::uint64_t step);

/// One bias-corrected Adam update using each parameter's grad buffer, which
/// is zeroed afterwards. Throws DimensionError on a shape mismatch and
/// NumericError (nothing updated) if any gradient is not finite.
template <typename T>
void adam_step(AdamState<T>& state, const std::vector<ParamRef<T>>& params, double lr);

/// lambda * sum of squared entries over weight tensors (biases excluded).
template <typename T>
Var<T> l2_penalty(Tape<T>& tape, const std::vector<ParamRef<T>>& params, double lambda);

extern template struct AdamState<float>;
extern template struct AdamState<double>;

}  // namespace cardionet
