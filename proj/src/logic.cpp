#include "tpsl/logic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tpsl {

TruthValue::TruthValue(double value) {
  if (!std::isfinite(value) || value < -kBoundaryTolerance ||
      value > 1.0 + kBoundaryTolerance) {
    throw std::domain_error("truth value outside [0, 1]: " +
                            std::to_string(value));
  }
  value_ = std::clamp(value, 0.0, 1.0);
}

TruthValue t_and(TruthValue a, TruthValue b) {
  return TruthValue(std::max(a.value() + b.value() - 1.0, 0.0));
}

TruthValue t_or(TruthValue a, TruthValue b) {
  return TruthValue(std::min(a.value() + b.value(), 1.0));
}

TruthValue t_not(TruthValue a) { return TruthValue(1.0 - a.value()); }

double distance_to_satisfaction(TruthValue body, TruthValue head) {
  return std::max(0.0, body.value() - head.value());
}

}  // namespace tpsl
