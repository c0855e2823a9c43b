#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cardionet/grad_check.hpp"

namespace cardionet {

inline constexpr double kGradTolerance = 1e-4;
inline constexpr double kGradEpsilon = 1e-5;

struct GradSuiteEntry {
  std::string group;      // ops | layers | model
  std::string component;  // op, layer or model variant under test
  GradCheckResult result;
  bool passed() const { return result.max_relative_error < kGradTolerance; }
};

/// 64-bit central-difference checks over every op, every layer type and the
/// three tiny end-to-end variants. `group` is all, ops, layers or model.
std::vector<GradSuiteEntry> run_grad_suite(std::string_view group);

}  // namespace cardionet
