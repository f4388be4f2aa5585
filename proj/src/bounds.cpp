#include "spinsim/bounds.hpp"

#include <cmath>
#include <string>

#include "spinsim/errors.hpp"

namespace spinsim {

namespace {

double growth(const NormConstants& m, double t_end) {
  return std::exp(2.0 * t_end * (m.q_inf + m.dstar_q_1));
}

void require_nonnegative(double v, const char* what) {
  if (!(std::isfinite(v) && v >= 0.0)) {
    throw ConfigError(std::string(what) + " must be finite and nonnegative");
  }
}

}  // namespace

double euler_bound(const NormConstants& m, std::size_t n, double delta, double t_end) {
  const double lead = 4.0 * static_cast<double>(n) * delta * t_end * m.q_inf * m.dstar_q_1;
  return lead == 0.0 ? 0.0 : lead * growth(m, t_end);
}

MidpointBound midpoint_bound(const NormConstants& m, std::size_t n, double delta, double t_end) {
  MidpointBound r;
  r.alpha = static_cast<double>(n) * delta * delta * m.q_inf * (1.0 + m.q_inf) *
                (1.0 + m.dstar_q_1) * (m.big_gamma_n + m.dstar_q_1) +
            delta * m.q_inf * m.gamma_n + std::sqrt(delta * m.q_inf) * m.dstar_q_21;
  r.bound = r.alpha == 0.0 ? 0.0 : 10.0 * r.alpha * (t_end + 1.0) * growth(m, t_end);
  return r;
}

double e_growth_bound(const NormConstants& m, double t_end) {
  const double lead = 0.5 * m.q_inf * m.dstar_q_1 * t_end;
  return lead == 0.0 ? 0.0 : lead * std::exp(t_end * m.d_q_1);
}

BoundReport evaluate_bounds(const NormConstants& norms, std::size_t n, double delta,
                            double t_end) {
  require_nonnegative(delta, "delta");
  require_nonnegative(t_end, "t_end");
  for (double v : {norms.q_inf, norms.dstar_q_1, norms.d_q_1, norms.dstar_q_inf,
                   norms.dstar_q_21, norms.gamma_n, norms.big_gamma_n}) {
    require_nonnegative(v, "norm constant");
  }
  BoundReport r;
  r.n = n;
  r.delta = delta;
  r.t_end = t_end;
  r.norms = norms;
  r.euler_bound = euler_bound(norms, n, delta, t_end);
  const MidpointBound mid = midpoint_bound(norms, n, delta, t_end);
  r.midpoint_alpha = mid.alpha;
  r.midpoint_bound = mid.bound;
  r.e_growth_bound = e_growth_bound(norms, t_end);
  return r;
}

}  // namespace spinsim
