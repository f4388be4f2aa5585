#include "spinsim/deterministic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spinsim/errors.hpp"
#include "spinsim/two_state.hpp"

namespace spinsim {

namespace {

void validate_rho0(const RateModel& model, const RealState& rho0) {
  if (rho0.size() != model.size()) {
    throw ConfigError("initial density has length " + std::to_string(rho0.size()) +
                      ", model has " + std::to_string(model.size()));
  }
  for (double r : rho0) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("initial density must lie in [0,1]^n");
  }
}

void validate_horizon(double t_end, double h) {
  if (!(std::isfinite(t_end) && t_end > 0.0)) throw ConfigError("t_end must be positive");
  if (!(std::isfinite(h) && h > 0.0)) throw ConfigError("ODE step h must be positive");
}

std::size_t step_count(double t_end, double h) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t_end / h - 1e-9)));
}

// Clamps into [0,1]; returns the largest excursion seen.
double clamp_unit(std::span<double> x) {
  double worst = 0.0;
  for (double& v : x) {
    if (!std::isfinite(v)) throw SolverError("ODE state became non-finite");
    if (v < 0.0) {
      worst = std::max(worst, -v);
      v = 0.0;
    } else if (v > 1.0) {
      worst = std::max(worst, v - 1.0);
      v = 1.0;
    }
  }
  return worst;
}

void check_excursion(double excursion, double t) {
  if (excursion > kOdeExcursionLimit) {
    throw SolverError("ODE solution left [0,1] by " + std::to_string(excursion) + " at t=" +
                      std::to_string(t) + "; reduce the step");
  }
}

bool keep(std::size_t k, std::size_t steps, std::size_t stride) {
  return k % stride == 0 || k == steps;
}

// y_out = y + a * k
void axpy(std::span<const double> y, double a, std::span<const double> k, std::span<double> out) {
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] + a * k[i];
}

}  // namespace

double default_ode_step(double t_end, double delta) {
  if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
  const double h = delta > 0.0 ? std::min(delta, t_end / 2000.0) : t_end / 2000.0;
  return t_end / static_cast<double>(step_count(t_end, h));
}

OdeSolution solve_rho(const RateModel& model, RealState rho0, double t_end, double h,
                      std::size_t record_stride) {
  validate_rho0(model, rho0);
  validate_horizon(t_end, h);
  record_stride = std::max<std::size_t>(record_stride, 1);
  const std::size_t n = model.size();
  const std::size_t steps = step_count(t_end, h);
  const double dt = t_end / static_cast<double>(steps);

  OdeSolution sol;
  sol.solver_step = dt;
  RealState y = std::move(rho0);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  sol.times.push_back(0.0);
  sol.states.push_back(y);
  for (std::size_t k = 1; k <= steps; ++k) {
    model.drift(y, k1);
    axpy(y, 0.5 * dt, k1, tmp);
    model.drift(tmp, k2);
    axpy(y, 0.5 * dt, k2, tmp);
    model.drift(tmp, k3);
    axpy(y, dt, k3, tmp);
    model.drift(tmp, k4);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    const double t = static_cast<double>(k) * dt;
    const double excursion = clamp_unit(y);
    check_excursion(excursion, t);
    sol.max_excursion = std::max(sol.max_excursion, excursion);
    if (keep(k, steps, record_stride)) {
      sol.times.push_back(t);
      sol.states.push_back(y);
    }
  }
  return sol;
}

OdeSolution solve_rho_delta(const RateModel& model, RealState rho0, double delta, double t_end,
                            std::size_t record_stride) {
  validate_rho0(model, rho0);
  validate_horizon(t_end, delta);
  record_stride = std::max<std::size_t>(record_stride, 1);
  const std::size_t n = model.size();
  const std::size_t steps = step_count(t_end, delta);

  OdeSolution sol;
  sol.solver_step = delta;
  RealState y = std::move(rho0);
  std::vector<double> up(n), down(n);
  sol.times.push_back(0.0);
  sol.states.push_back(y);
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t0 = static_cast<double>(k - 1) * delta;
    const double t1 = std::min(static_cast<double>(k) * delta, t_end);
    model.rates(y, up, down);
    for (std::size_t i = 0; i < n; ++i) {
      const double total = up[i] + down[i];
      y[i] += (up[i] - total * y[i]) * detail::relaxation_factor(total, t1 - t0);
    }
    const double excursion = clamp_unit(y);
    check_excursion(excursion, t1);
    sol.max_excursion = std::max(sol.max_excursion, excursion);
    if (keep(k, steps, record_stride)) {
      sol.times.push_back(t1);
      sol.states.push_back(y);
    }
  }
  return sol;
}

OdeSolution solve_error_field(const RateModel& model, const OdeSolution& rho_solution,
                              double t_end, double h, std::size_t record_stride) {
  if (rho_solution.states.empty()) throw ConfigError("error field needs a density solution");
  if (rho_solution.times.back() < t_end * (1.0 - 1e-12)) {
    throw ConfigError("density solution ends before t_end");
  }
  return solve_error_field(model, rho_solution.states.front(), t_end, h, record_stride);
}

OdeSolution solve_error_field(const RateModel& model, const RealState& rho0, double t_end,
                              double h, std::size_t record_stride) {
  validate_rho0(model, rho0);
  validate_horizon(t_end, h);
  record_stride = std::max<std::size_t>(record_stride, 1);
  const std::size_t n = model.size();
  const std::size_t steps = step_count(t_end, h);
  const double dt = t_end / static_cast<double>(steps);

  std::vector<double> q(n), jq(n), je(n);
  // Right-hand side of the joint (rho, E) system.
  auto rhs = [&](std::span<const double> r, std::span<const double> e, std::span<double> dr,
                 std::span<double> de) {
    model.drift(r, q);
    std::copy(q.begin(), q.end(), dr.begin());
    model.jacobian_apply(r, q, jq, true);
    model.jacobian_apply(r, e, je, false);
    for (std::size_t i = 0; i < n; ++i) de[i] = je[i] + 0.5 * jq[i];
  };

  OdeSolution sol;
  sol.solver_step = dt;
  RealState r = rho0;
  RealState e(n, 0.0);
  std::vector<double> kr1(n), kr2(n), kr3(n), kr4(n), ke1(n), ke2(n), ke3(n), ke4(n);
  std::vector<double> rt(n), et(n);
  sol.times.push_back(0.0);
  sol.states.push_back(e);
  for (std::size_t k = 1; k <= steps; ++k) {
    rhs(r, e, kr1, ke1);
    axpy(r, 0.5 * dt, kr1, rt);
    axpy(e, 0.5 * dt, ke1, et);
    rhs(rt, et, kr2, ke2);
    axpy(r, 0.5 * dt, kr2, rt);
    axpy(e, 0.5 * dt, ke2, et);
    rhs(rt, et, kr3, ke3);
    axpy(r, dt, kr3, rt);
    axpy(e, dt, ke3, et);
    rhs(rt, et, kr4, ke4);
    for (std::size_t i = 0; i < n; ++i) {
      r[i] += dt / 6.0 * (kr1[i] + 2.0 * kr2[i] + 2.0 * kr3[i] + kr4[i]);
      e[i] += dt / 6.0 * (ke1[i] + 2.0 * ke2[i] + 2.0 * ke3[i] + ke4[i]);
    }
    const double t = static_cast<double>(k) * dt;
    const double excursion = clamp_unit(r);
    check_excursion(excursion, t);
    sol.max_excursion = std::max(sol.max_excursion, excursion);
    for (double v : e) {
      if (!std::isfinite(v)) throw SolverError("error field became non-finite");
    }
    if (keep(k, steps, record_stride)) {
      sol.times.push_back(t);
      sol.states.push_back(e);
    }
  }
  return sol;
}

double weighted_mean(const RealState& e, std::span<const double> phi) {
  if (e.empty()) return 0.0;
  if (!phi.empty() && phi.size() != e.size()) throw ConfigError("weight vector length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) s += (phi.empty() ? 1.0 : phi[i]) * e[i];
  return s / static_cast<double>(e.size());
}

RealState find_equilibrium(const RateModel& model, RealState start, double tolerance,
                           std::size_t max_iterations) {
  validate_rho0(model, start);
  const std::size_t n = model.size();
  std::vector<double> up(n), down(n);
  RealState rho = std::move(start);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    model.rates(rho, up, down);
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double total = up[i] + down[i];
      if (total <= 0.0) continue;
      const double next = up[i] / total;
      change = std::max(change, std::abs(next - rho[i]));
      rho[i] = next;
    }
    if (change <= tolerance) return rho;
  }
  throw SolverError("equilibrium iteration did not converge");
}

}  // namespace spinsim
