#pragma once

#include <cstddef>
#include <vector>

#include "spinsim/rate_model.hpp"
#include "spinsim/spin_state.hpp"

namespace spinsim {

struct OdeSolution {
  std::vector<double> times;
  std::vector<RealState> states;
  /// Internal integration step.
  double solver_step = 0.0;
  /// Largest distance any stage left [0,1] before clamping.
  double max_excursion = 0.0;
};

/// Excursions beyond this raise SolverError.
inline constexpr double kOdeExcursionLimit = 1e-6;

/// min(delta, t_end / 2000), shrunk so that it divides t_end. A nonpositive
/// delta means "no grid" and yields t_end / 2000.
double default_ode_step(double t_end, double delta);

/// Classical RK4 for d rho_i/dt = (1 - rho_i) q_i^+(rho) - rho_i q_i^-(rho).
/// The step is shrunk to divide t_end. Every record_stride-th step is kept
/// (plus both end points).
OdeSolution solve_rho(const RateModel& model, RealState rho0, double t_end, double h,
                      std::size_t record_stride = 1);

/// Independent-site companion: rates frozen at rho^delta(k delta) on each
/// interval [k delta, (k+1) delta), integrated in closed form. States are
/// recorded at every grid point whose index is a multiple of record_stride,
/// plus t_end.
OdeSolution solve_rho_delta(const RateModel& model, RealState rho0, double delta, double t_end,
                            std::size_t record_stride = 1);

/// First-order error field:
///   dE/dt = J(rho) E + 1/2 J*(rho) q(rho),  E(0) = 0,
/// where (J w)_i = sum_j d_j q_i w_j, J* drops the diagonal, and q is the
/// drift. This is the mean lag of the frozen-rate scheme: rates held over
/// a step see the state a mean of delta/2 late. rho is re-integrated alongside E by RK4 with the same step,
/// starting from rho_solution.states.front(); rho_solution fixes the
/// initial state and the time horizon must not exceed its span.
OdeSolution solve_error_field(const RateModel& model, const OdeSolution& rho_solution,
                              double t_end, double h, std::size_t record_stride = 1);
/// Same, started directly from rho0.
OdeSolution solve_error_field(const RateModel& model, const RealState& rho0, double t_end,
                              double h, std::size_t record_stride = 1);

/// n^{-1} sum_i phi_i E_i, or the plain mean when phi is empty.
double weighted_mean(const RealState& e, std::span<const double> phi = {});

/// Fixed point of rho_i = q_i^+(rho) / (q_i^+(rho) + q_i^-(rho)) by damped
/// iteration from `start`; the drift vanishes there.
RealState find_equilibrium(const RateModel& model, RealState start, double tolerance = 1e-13,
                           std::size_t max_iterations = 100000);

}  // namespace spinsim
