#pragma once

#include <cstddef>
#include <optional>

namespace cardionet {

/// Binary confusion counts with ischemic (label 1) as the positive class.
/// Ratios with a zero denominator are absent rather than 0.
struct Metrics {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  void add(int truth, int predicted);
  std::size_t total() const { return tp + fp + fn + tn; }

  std::optional<double> accuracy() const;
  std::optional<double> sensitivity() const;
  std::optional<double> specificity() const;

  bool operator==(const Metrics&) const = default;
};

}  // namespace cardionet
