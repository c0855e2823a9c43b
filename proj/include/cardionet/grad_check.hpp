#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "cardionet/tape.hpp"

namespace cardionet {

template <typename T>
using LossFn = std::function<Var<T>(Tape<T>&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_path;  // empty when no parameter was checked
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

/// |a - n| / max(|a|, |n|, 1e-6). The floor keeps gradients that are zero up
/// to rounding from dominating the report.
double relative_error(double analytic, double numeric);

/// Compares tape gradients against central differences (f(x+eps) - f(x-eps)) / 2eps
/// for every scalar of every parameter. `loss_fn` must build a scalar loss on
/// the tape it is given, registering parameters via Tape::param. Throws
/// ContractError if two evaluations at the same point differ. Parameter
/// values are restored and gradients cleared on return.
template <typename T>
GradCheckResult grad_check(const LossFn<T>& loss_fn, const std::vector<ParamRef<T>>& params, T eps);

extern template GradCheckResult grad_check<float>(const LossFn<float>&, const std::vector<ParamRef<float>>&, float);
extern template GradCheckResult grad_check<double>(const LossFn<double>&, const std::vector<ParamRef<double>>&,
                                                   double);

}  // namespace cardionet
