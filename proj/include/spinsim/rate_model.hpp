#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spinsim/fast_sum.hpp"
#include "spinsim/spin_state.hpp"

namespace spinsim {

/// Regularity constants of the rate field q viewed as a map [0,1]^n -> R^n.
///
/// With q_i the drift (1 - x_i) q_i^+(x) - x_i q_i^-(x):
///   q_inf        max_i sup_x max(q_i^+, q_i^-)   (bounds sup |q_i| from above)
///   dstar_q_1    max_j sum_{i != j} sup |d_j q_i|     (column sums)
///   d_q_1        max_j sum_i sup |d_j q_i|
///   dstar_q_inf  max_i sum_{j != i} sup |d_j q_i|     (row sums)
///   dstar_q_21   sum_i (sum_{j != i} sup |d_j q_i|^2)^{1/2}
///   gamma_n      sum_{i != j} sup |d_j^2 q_i|
///   big_gamma_n  max_i sum_{j,k != i} sup |d_j d_k q_i|
struct NormConstants {
  double q_inf = 0.0;
  double dstar_q_1 = 0.0;
  double d_q_1 = 0.0;
  double dstar_q_inf = 0.0;
  double dstar_q_21 = 0.0;
  double gamma_n = 0.0;
  double big_gamma_n = 0.0;
  /// True when the entries are upper bounds rather than exact suprema.
  bool upper_bound = false;
};

/// Rates of a spin system whose flip intensities depend on the state through
/// per-site potentials v_i = sum_j s_ij x_j:  q_i^+(x) = f_i^+(v_i),
/// q_i^-(x) = f_i^-(v_i). Implementations are immutable after construction
/// and safe to share between threads.
class RateModel {
 public:
  virtual ~RateModel() = default;

  virtual std::string name() const = 0;
  virtual std::size_t size() const = 0;
  /// Lattice layout for 2-D output, when the sites form one.
  virtual std::optional<LatticeShape> lattice() const { return std::nullopt; }

  /// v = potentials(x). Throws ConfigError on length mismatch.
  virtual void potentials(std::span<const double> x, std::span<double> v) const = 0;
  /// v += (dv/dx_j) * dx: the O(n) update after site j changes by dx.
  virtual void shift_potentials(std::span<double> v, std::size_t j, double dx) const = 0;

  virtual double rate_up(std::size_t i, double v_i) const = 0;
  virtual double rate_down(std::size_t i, double v_i) const = 0;
  virtual void rates_from_potentials(std::span<const double> v, std::span<double> up,
                                     std::span<double> down) const;

  /// out_i = sum_j d_j drift_i(x) w_j, or the same sum over j != i when
  /// off_diagonal is set.
  virtual void jacobian_apply(std::span<const double> x, std::span<const double> w,
                              std::span<double> out, bool off_diagonal) const = 0;

  virtual NormConstants norm_constants() const = 0;

  // Convenience wrappers over the primitives above.
  std::vector<double> potentials(std::span<const double> x) const;
  void rates(std::span<const double> x, std::span<double> up, std::span<double> down) const;
  std::vector<double> rates_up(std::span<const double> x) const;
  std::vector<double> rates_down(std::span<const double> x) const;
  void drift(std::span<const double> x, std::span<double> out) const;
  std::vector<double> drift(std::span<const double> x) const;
  std::vector<double> jacobian_apply(std::span<const double> x, std::span<const double> w,
                                     bool off_diagonal = false) const;

 protected:
  void require_length(std::size_t got, const char* what) const;
};

/// Intensity q(eta, i) at which site i leaves its current value.
double rate_function(const RateModel& model, const SpinState& eta, std::size_t i);

}  // namespace spinsim
