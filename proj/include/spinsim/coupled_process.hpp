#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "spinsim/rate_model.hpp"
#include "spinsim/simulators.hpp"
#include "spinsim/spin_state.hpp"
#include "spinsim/stream_bank.hpp"

namespace spinsim {

struct MethodSpec {
  Method method = Method::exact;
  /// Grid step; ignored for the exact method.
  double delta = 0.0;
  std::string label;
};

/// One process of a random-time-change coupling. Site i flips upward at the
/// first time its integrated up-intensity Lambda_i^+ reaches the next arrival
/// of the bank's (i, up) stream, and likewise downward. Only the intensity of
/// the currently possible direction grows.
///
/// The exact process recomputes rates after each flip. The grid processes
/// refresh them at t_k = k delta only (Euler: at eta(t_k); midpoint: at the
/// half-step predictor). Integrated intensities are only touched at the
/// process's own events and grid points, so the path does not depend on
/// which other processes share the bank.
class CoupledProcess {
 public:
  CoupledProcess(const RateModel& model, MethodSpec spec, const SpinState& init,
                 const PoissonStreamBank& bank);

  const MethodSpec& spec() const noexcept { return spec_; }
  const std::vector<std::uint8_t>& state() const noexcept { return x_; }
  std::size_t ones() const noexcept { return ones_; }
  std::uint64_t event_count() const noexcept { return events_; }

  /// Time of the next action (flip or rate refresh); +inf when none remain.
  double next_time() const noexcept;
  /// Performs the next action. Returns the flipped site, or nullopt when the
  /// action was a rate refresh at a grid point.
  std::optional<std::size_t> advance();

 private:
  void refresh_grid_rates(double t);
  // Installs next_up_/next_down_ as the current rates. A site's integrated
  // intensity is folded up to t only when its active rate changes, so equal
  // rate histories give bit-identical event times across processes.
  void fold_rates(double t);
  void recompute_exact_rates_after_flip(std::size_t site, double t);
  double candidate(std::size_t i) const noexcept;
  void rescan();

  const RateModel& model_;
  MethodSpec spec_;
  const PoissonStreamBank& bank_;
  std::size_t n_;

  std::vector<std::uint8_t> x_;
  std::size_t ones_ = 0;
  std::vector<double> v_;
  std::vector<double> up_;
  std::vector<double> down_;
  // Integrated intensity per direction, valid at t_site_[i].
  std::vector<double> lambda_up_;
  std::vector<double> lambda_down_;
  std::vector<double> t_site_;
  std::vector<StreamCursor> cur_up_;
  std::vector<StreamCursor> cur_down_;

  std::size_t next_site_ = 0;
  double next_flip_ = std::numeric_limits<double>::infinity();
  std::uint64_t next_grid_ = 0;
  std::uint64_t events_ = 0;
  std::uint64_t since_refresh_ = 0;

  std::vector<double> next_up_;
  std::vector<double> next_down_;
  std::vector<double> scratch_x_;
  std::vector<double> scratch_z_;
};

}  // namespace spinsim
