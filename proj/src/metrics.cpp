#include "cardionet/metrics.hpp"

namespace cardionet {

namespace {
std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

void Metrics::add(int truth, int predicted) {
  if (truth == 1)
    (predicted == 1 ? tp : fn) += 1;
  else
    (predicted == 1 ? fp : tn) += 1;
}

std::optional<double> Metrics::accuracy() const { return ratio(tp + tn, total()); }
std::optional<double> Metrics::sensitivity() const { return ratio(tp, tp + fn); }
std::optional<double> Metrics::specificity() const { return ratio(tn, tn + fp); }

}  // namespace cardionet
