#pragma once

#include <cmath>

namespace spinsim {

/// Probability that a two-state chain with constant rates q_up (0 -> 1) and
/// q_down (1 -> 0) is in state 1 after time delta, started from eta_i.
///
/// With Q = q_up + q_down the 0 -> 1 entry is (q_up/Q)(1 - e^{-delta Q}).
/// Throws DomainError for negative or non-finite inputs.
double transition_probability(double q_up, double q_down, int eta_i, double delta);

namespace detail {

/// (1 - e^{-delta Q}) / Q, continuous at Q = 0.
inline double relaxation_factor(double total_rate, double delta) noexcept {
  if (total_rate == 0.0) return delta;
  return -std::expm1(-delta * total_rate) / total_rate;
}

/// Unchecked form used inside the sampling kernels.
inline double transition_probability_unchecked(double q_up, double q_down, int eta_i,
                                               double delta) noexcept {
  const double factor = relaxation_factor(q_up + q_down, delta);
  return eta_i == 0 ? q_up * factor : 1.0 - q_down * factor;
}

}  // namespace detail
}  // namespace spinsim
