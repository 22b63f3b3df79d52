#pragma once

namespace tpsl {

// Soft truth value of a ground atom, always within [0, 1].
//
// Inputs within 1e-12 of the interval are clamped onto it so softmax outputs
// that stray by rounding are accepted; anything further out is rejected with
// std::domain_error.
class TruthValue {
 public:
  static constexpr double kBoundaryTolerance = 1e-12;

  constexpr TruthValue() = default;
  explicit TruthValue(double value);

  constexpr double value() const { return value_; }

  friend constexpr bool operator==(TruthValue, TruthValue) = default;

 private:
  double value_ = 0.0;
};

// Lukasiewicz conjunction: max(a + b - 1, 0).
TruthValue t_and(TruthValue a, TruthValue b);

// Lukasiewicz disjunction: min(a + b, 1).
TruthValue t_or(TruthValue a, TruthValue b);

// Negation: 1 - a.
TruthValue t_not(TruthValue a);

// Distance to satisfaction of body -> head: max(0, body - head).
double distance_to_satisfaction(TruthValue body, TruthValue head);

}  // namespace tpsl
