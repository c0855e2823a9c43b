#include "cardionet/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "cardionet/errors.hpp"

namespace cardionet {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

namespace {

template <typename T>
T evaluate(const LossFn<T>& fn) {
  Tape<T> tape;
  Var<T> loss = fn(tape);
  if (loss.numel() != 1) throw ContractError("grad_check: loss must be scalar, got " + shape_str(loss.shape()));
  return loss.value().values[0];
}

}  // namespace

template <typename T>
GradCheckResult grad_check(const LossFn<T>& loss_fn, const std::vector<ParamRef<T>>& params, T eps) {
  if (!(eps > T(0))) throw ContractError("grad_check: eps must be positive");
  GradCheckResult result;

  const T f0 = evaluate(loss_fn);
  const T f1 = evaluate(loss_fn);
  if (std::memcmp(&f0, &f1, sizeof(T)) != 0)
    throw ContractError("grad_check: forward function is not deterministic");

  for (const auto& p : params) p.tensor->grad.assign(p.tensor->numel(), T(0));
  {
    Tape<T> tape;
    tape.backward(loss_fn(tape));
  }
  std::vector<std::vector<T>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p.tensor->grad);

  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& values = params[k].tensor->values;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const T saved = values[i];
      values[i] = saved + eps;
      const T fp = evaluate(loss_fn);
      values[i] = saved - eps;
      const T fm = evaluate(loss_fn);
      values[i] = saved;
      const double numeric = (static_cast<double>(fp) - static_cast<double>(fm)) / (2.0 * static_cast<double>(eps));
      const double err = relative_error(static_cast<double>(analytic[k][i]), numeric);
      ++result.checked;
      if (result.worst_path.empty() || err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_path = params[k].path;
        result.worst_index = i;
      }
    }
  }
  for (const auto& p : params) p.tensor->grad.clear();
  return result;
}

template GradCheckResult grad_check<float>(const LossFn<float>&, const std::vector<ParamRef<float>>&, float);
template GradCheckResult grad_check<double>(const LossFn<double>&, const std::vector<ParamRef<double>>&, double);

}  // namespace cardionet
