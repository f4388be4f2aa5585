#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spinsim/parallel.hpp"
#include "spinsim/rate_model.hpp"
#include "spinsim/spin_state.hpp"
#include "spinsim/two_state.hpp"

namespace spinsim {

class PoissonStreamBank;

enum class Method { exact, euler, midpoint };

/// "exact", "euler", "midpoint". Throws ConfigError otherwise.
Method parse_method(const std::string& name);
std::string method_name(Method m);

/// How the initial configuration is drawn.
struct InitSpec {
  enum class Kind {
    bernoulli,  ///< independent sites, P(eta_i = 1) = p, drawn from the run seed
    fraction,   ///< floor(p n) occupied sites at evenly spaced indices
    explicit_bits,
    profile,    ///< independent sites with site-specific probabilities
  };

  Kind kind = Kind::bernoulli;
  double p = 0.5;
  std::vector<std::uint8_t> bits;
  std::vector<double> probabilities;

  static InitSpec bernoulli(double p);
  static InitSpec fraction(double p);
  static InitSpec explicit_state(const SpinState& s);
  static InitSpec profile(std::vector<double> probabilities);

  /// "bernoulli:0.5", "fraction:0.1".
  static InitSpec parse(const std::string& text);
  std::string describe() const;
};

SpinState make_initial_state(const InitSpec& init, std::size_t n, std::uint64_t seed);
/// E eta(0): the initial condition of the deterministic companions.
RealState initial_mean(const InitSpec& init, std::size_t n);

struct SimConfig {
  double t_end = 1.0;
  /// Grid step of the decoupled schemes. Unused by the exact simulator.
  double delta = 0.0;
  std::uint64_t seed = 0;
  /// Recording cadence; 0 selects 10 delta (or t_end / 100 without a grid).
  double sample_every = 0.0;
  InitSpec init;
  bool record_snapshots = false;
  Exec exec = Exec::parallel;
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> occupancy;
  /// Transitions up to and including each sample time.
  std::vector<std::uint64_t> events_cum;
  std::vector<SpinState> snapshots;
  std::uint64_t event_count = 0;
  std::int64_t wall_ns = 0;
};

/// Sampling plan shared by every simulator: sample j sits at j * every, for
/// all j with j * every <= t_end.
struct SampleSchedule {
  double every = 0.0;
  std::size_t count = 0;
  /// Grid steps between samples (grid methods only).
  std::size_t stride = 0;

  double time(std::size_t j) const noexcept { return static_cast<double>(j) * every; }
};

/// Validates the config for a method that needs a grid (uses_grid) or not,
/// and resolves the sample cadence. Throws ConfigError.
SampleSchedule resolve_schedule(const SimConfig& cfg, bool uses_grid);

/// Throws ModelError if any rate is negative or not finite.
void check_rates(std::span<const double> up, std::span<const double> down);

/// Throws ConfigError unless delta <= 2 / q_inf.
void validate_midpoint_step(const NormConstants& norms, double delta);

/// Midpoint predictor p(z)_i = z_i + delta/2 * drift_i(z), clamped into
/// [0,1]. Throws ModelError if a coordinate leaves [0,1] by more than 1e-9.
void midpoint_predictor(const RateModel& model, std::span<const double> x, double delta,
                        std::span<double> out);

/// Doob-Gillespie: exponential holding times, site chosen proportionally to
/// its rate, potentials updated incrementally after every flip.
TrajectoryRecord simulate_exact(const RateModel& model, const SimConfig& cfg);
/// Site-decoupled scheme with rates frozen at the last grid point.
TrajectoryRecord simulate_euler(const RateModel& model, const SimConfig& cfg);
/// Site-decoupled scheme with rates evaluated at the half-step predictor.
TrajectoryRecord simulate_midpoint(const RateModel& model, const SimConfig& cfg);

/// The same three processes driven by an explicit bank of unit-rate Poisson
/// streams (random time change). Paths coincide bit for bit with the
/// corresponding process inside couple_run() on the same bank.
TrajectoryRecord simulate_exact(const RateModel& model, const SimConfig& cfg,
                                const PoissonStreamBank& bank);
TrajectoryRecord simulate_euler(const RateModel& model, const SimConfig& cfg,
                                const PoissonStreamBank& bank);
TrajectoryRecord simulate_midpoint(const RateModel& model, const SimConfig& cfg,
                                   const PoissonStreamBank& bank);

/// Fills rho with the deterministic state used on grid interval `step`
/// (which starts at time t = step * delta).
using RhoProvider = std::function<void(std::size_t step, double t, std::span<double> rho)>;

/// n independent two-state chains with rates q_i^{+/-}(rho(t)), rho frozen at
/// grid points.
TrajectoryRecord simulate_independent_sites(const RateModel& model, const SimConfig& cfg,
                                            const RhoProvider& rho);

struct TauLeapResult {
  TrajectoryRecord record;
  /// Site updates that left {0,1} (each clamped back).
  std::uint64_t invalid_state_count = 0;
  /// Steps in which at least one site left {0,1}.
  std::uint64_t invalid_step_count = 0;
  std::uint64_t steps = 0;
};

/// Plain Poisson tau-leaping: eta_i += Poisson(delta (1-eta_i) q_i^+) -
/// Poisson(delta eta_i q_i^-), with excursions outside {0,1} counted.
TauLeapResult simulate_poisson_tau_leap(const RateModel& model, const SimConfig& cfg);

}  // namespace spinsim
