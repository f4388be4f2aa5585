#pragma once

#include <cstddef>

#include "spinsim/rate_model.hpp"

namespace spinsim {

/// Strong error bound of the Euler scheme:
///   4 n delta T ||q||_inf ||D*q||_1 exp(2T(||q||_inf + ||D*q||_1)).
double euler_bound(const NormConstants& norms, std::size_t n, double delta, double t_end);

struct MidpointBound {
  double alpha = 0.0;
  double bound = 0.0;
};

/// alpha = n delta^2 ||q||_inf (1+||q||_inf)(1+||D*q||_1)(Gamma_n+||D*q||_1)
///         + delta ||q||_inf gamma_n + delta^{1/2} ||q||_inf^{1/2} ||D*q||_{2,1},
/// bound = 10 alpha (T+1) exp(2T(||q||_inf + ||D*q||_1)).
MidpointBound midpoint_bound(const NormConstants& norms, std::size_t n, double delta,
                             double t_end);

/// Growth bound of the error field: 1/2 ||q||_inf ||D*q||_1 T exp(T ||Dq||_1).
double e_growth_bound(const NormConstants& norms, double t_end);

struct BoundReport {
  std::size_t n = 0;
  double delta = 0.0;
  double t_end = 0.0;
  NormConstants norms;
  double euler_bound = 0.0;
  double midpoint_alpha = 0.0;
  double midpoint_bound = 0.0;
  double e_growth_bound = 0.0;
};

/// Throws ConfigError for negative or non-finite inputs.
BoundReport evaluate_bounds(const NormConstants& norms, std::size_t n, double delta,
                            double t_end);

}  // namespace spinsim
