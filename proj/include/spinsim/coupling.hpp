#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spinsim/coupled_process.hpp"
#include "spinsim/rate_model.hpp"
#include "spinsim/simulators.hpp"

namespace spinsim {

/// Discrepancy of one approximate process against the coupled exact one.
struct MethodSeries {
  MethodSpec spec;
  /// n^{-1} sum_i |eta_i - eta^m_i| at each sample time.
  std::vector<double> frac_diff;
  /// Supremum of frac_diff over all event times up to each sample time.
  std::vector<double> cummax_frac_diff;
  /// (n delta)^{-1} sum_i phi_i (eta_i - eta^m_i).
  std::vector<double> normalized_error;
};

struct CoupledErrorSeries {
  std::vector<double> times;
  /// One entry per non-exact method, in request order.
  std::vector<MethodSeries> methods;
};

struct CoupledRun {
  CoupledErrorSeries errors;
  /// The exact reference process first, then each non-exact method.
  std::vector<MethodSpec> specs;
  std::vector<TrajectoryRecord> records;
};

/// Runs an exact process and every non-exact method of `methods` on one
/// PoissonStreamBank seeded by cfg.seed, from one initial state. The exact
/// process is always present as the reference; listing it is optional.
/// Events sharing a time stamp are applied together before the running
/// supremum is updated. phi defaults to all ones.
CoupledRun couple_run(const RateModel& model, const SimConfig& cfg,
                      const std::vector<MethodSpec>& methods, std::span<const double> phi = {});

/// Seed of replicate r derived from a master seed.
std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t r);

struct NormalizedErrorSeries {
  std::vector<double> times;
  std::vector<double> observed_mean;
  std::vector<double> observed_stderr;
  /// n^{-1} sum_i phi_i E_i(t), with rho(0) = E eta(0).
  std::vector<double> predicted;
  std::size_t replicates = 0;
};

/// Replicates couple_run for {exact, method} over independent seeds (in
/// parallel) and compares the mean normalized error with the error field.
NormalizedErrorSeries normalized_error_experiment(const RateModel& model, const SimConfig& cfg,
                                                  const MethodSpec& method,
                                                  std::size_t replicates,
                                                  std::span<const double> phi = {});

/// n^{-1} sum_i phi_i E_i(t) at the given equally spaced times (times[j] =
/// j * every), integrated with a step dividing `every`.
std::vector<double> predicted_error_curve(const RateModel& model, const RealState& rho0,
                                          double every, std::size_t count, double delta,
                                          std::span<const double> phi = {});

struct BenchRow {
  std::size_t m = 0;
  std::size_t n = 0;
  std::string method;
  double delta = 0.0;
  double mean_wall_ns = 0.0;
  /// Mean over repetitions of wall(exact) / wall(method); 1 for exact.
  double speedup_vs_exact = 1.0;
  double speedup_stderr = 0.0;
  std::size_t reps = 0;
};

struct BenchOptions {
  std::vector<std::size_t> exponents{5, 6, 7};
  std::size_t reps = 3;
  double t_end = 1.0;
  std::uint64_t seed = 1;
  /// Ising-Kac parameters; a = a_scale / n.
  double beta = 1.0;
  double a_scale = 40.0;
};

/// Wall-time comparison on Ising-Kac grids of side 2^m: exact versus the
/// Euler scheme at delta = n^{-1/2} and the midpoint scheme at n^{-1/4}.
std::vector<BenchRow> bench_speedup(const BenchOptions& options);

}  // namespace spinsim
