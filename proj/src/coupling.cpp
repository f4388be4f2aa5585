#include "spinsim/coupling.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>

#include "spinsim/deterministic.hpp"
#include "spinsim/errors.hpp"
#include "spinsim/models.hpp"
#include "spinsim/parallel.hpp"
#include "spinsim/rng.hpp"
#include "spinsim/stream_bank.hpp"

namespace spinsim {

namespace {

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

MeanStderr mean_stderr(const std::vector<double>& xs) {
  MeanStderr r;
  if (xs.empty()) return r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return r;
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  return r;
}

// Runs body(r) for r in [0, count) on the worker pool; rethrows the first
// exception after the loop.
template <typename Body>
void parallel_for(std::size_t count, Body&& body) {
  std::exception_ptr failure;
  const auto total = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_count())
  for (long long r = 0; r < total; ++r) {
    try {
      body(static_cast<std::size_t>(r));
    } catch (...) {
#pragma omp critical(spinsim_parallel_for_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

CoupledRun couple_run(const RateModel& model, const SimConfig& cfg,
                      const std::vector<MethodSpec>& methods, std::span<const double> phi) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = model.size();
  if (!phi.empty() && phi.size() != n) throw ConfigError("weight vector length mismatch");
  const SampleSchedule schedule = resolve_schedule(cfg, false);
  const SpinState init = make_initial_state(cfg.init, n, cfg.seed);
  const PoissonStreamBank bank(cfg.seed);

  CoupledRun run;
  run.specs.push_back(MethodSpec{Method::exact, 0.0, "exact"});
  for (const MethodSpec& m : methods) {
    if (m.method == Method::exact) continue;
    MethodSpec spec = m;
    if (spec.label.empty()) spec.label = method_name(spec.method);
    run.specs.push_back(spec);
  }
  std::vector<std::unique_ptr<CoupledProcess>> procs;
  for (const MethodSpec& spec : run.specs) {
    procs.push_back(std::make_unique<CoupledProcess>(model, spec, init, bank));
  }

  const std::size_t approx = procs.size() - 1;
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<std::size_t> diff(approx, 0);
  std::vector<double> signed_sum(approx, 0.0);
  std::vector<double> running_max(approx, 0.0);
  run.records.resize(procs.size());
  run.errors.methods.resize(approx);
  for (std::size_t m = 0; m < approx; ++m) run.errors.methods[m].spec = run.specs[m + 1];

  auto record = [&](std::size_t j) {
    const double t = schedule.time(j);
    run.errors.times.push_back(t);
    for (std::size_t p = 0; p < procs.size(); ++p) {
      TrajectoryRecord& rec = run.records[p];
      rec.times.push_back(t);
      rec.occupancy.push_back(static_cast<double>(procs[p]->ones()) * inv_n);
      rec.events_cum.push_back(procs[p]->event_count());
      if (cfg.record_snapshots) rec.snapshots.emplace_back(procs[p]->state());
    }
    for (std::size_t m = 0; m < approx; ++m) {
      MethodSeries& s = run.errors.methods[m];
      const double frac = static_cast<double>(diff[m]) * inv_n;
      s.frac_diff.push_back(frac);
      s.cummax_frac_diff.push_back(std::max(running_max[m], frac));
      s.normalized_error.push_back(signed_sum[m] * inv_n / s.spec.delta);
    }
  };

  std::size_t j = 0;
  bool pending = false;
  double t_last = 0.0;
  while (true) {
    std::size_t p = 0;
    double t_next = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < procs.size(); ++k) {
      const double t = procs[k]->next_time();
      if (t < t_next) {
        t_next = t;
        p = k;
      }
    }
    if (pending && t_next > t_last) {
      for (std::size_t m = 0; m < approx; ++m) {
        running_max[m] = std::max(running_max[m], static_cast<double>(diff[m]) * inv_n);
      }
      pending = false;
    }
    while (j < schedule.count && schedule.time(j) < t_next) record(j++);
    if (j == schedule.count) break;

    const auto flipped = procs[p]->advance();
    t_last = t_next;
    if (!flipped) continue;
    pending = true;
    const std::size_t s = *flipped;
    const double weight = phi.empty() ? 1.0 : phi[s];
    const double dx = procs[p]->state()[s] == 1 ? 1.0 : -1.0;
    if (p == 0) {
      for (std::size_t m = 0; m < approx; ++m) {
        if (procs[0]->state()[s] != procs[m + 1]->state()[s]) {
          ++diff[m];
        } else {
          --diff[m];
        }
        signed_sum[m] += weight * dx;
      }
    } else {
      const std::size_t m = p - 1;
      if (procs[0]->state()[s] != procs[p]->state()[s]) {
        ++diff[m];
      } else {
        --diff[m];
      }
      signed_sum[m] -= weight * dx;
    }
  }

  const auto wall = std::chrono::duration_cast<std::chrono::nanoseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
  for (std::size_t p = 0; p < procs.size(); ++p) {
    run.records[p].event_count = procs[p]->event_count();
    run.records[p].wall_ns = wall;
  }
  return run;
}

std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t r) {
  return CounterRng(master).split(r).key();
}

std::vector<double> predicted_error_curve(const RateModel& model, const RealState& rho0,
                                          double every, std::size_t count, double delta,
                                          std::span<const double> phi) {
  std::vector<double> out(count, 0.0);
  if (count < 2) return out;
  const double t_end = every * static_cast<double>(count - 1);
  const double h0 = default_ode_step(t_end, delta);
  const auto per_sample = static_cast<std::size_t>(std::ceil(every / h0 - 1e-9));
  const double h = every / static_cast<double>(per_sample);
  const OdeSolution e = solve_error_field(model, rho0, t_end, h, per_sample);
  if (e.states.size() != count) throw SolverError("error field grid does not match samples");
  for (std::size_t j = 0; j < count; ++j) out[j] = weighted_mean(e.states[j], phi);
  return out;
}

NormalizedErrorSeries normalized_error_experiment(const RateModel& model, const SimConfig& cfg,
                                                  const MethodSpec& method,
                                                  std::size_t replicates,
                                                  std::span<const double> phi) {
  if (replicates == 0) throw ConfigError("replicates must be positive");
  if (method.method == Method::exact) throw ConfigError("normalized error needs a grid method");
  const SampleSchedule schedule = resolve_schedule(cfg, false);
  std::vector<std::vector<double>> observed(replicates);
  parallel_for(replicates, [&](std::size_t r) {
    SimConfig c = cfg;
    c.seed = replicate_seed(cfg.seed, r);
    c.record_snapshots = false;
    c.exec = Exec::serial;
    observed[r] = couple_run(model, c, {method}, phi).errors.methods.front().normalized_error;
  });

  NormalizedErrorSeries out;
  out.replicates = replicates;
  for (std::size_t j = 0; j < schedule.count; ++j) {
    out.times.push_back(schedule.time(j));
    std::vector<double> column(replicates);
    for (std::size_t r = 0; r < replicates; ++r) column[r] = observed[r][j];
    const MeanStderr ms = mean_stderr(column);
    out.observed_mean.push_back(ms.mean);
    out.observed_stderr.push_back(ms.stderr_);
  }
  out.predicted = predicted_error_curve(model, initial_mean(cfg.init, model.size()),
                                        schedule.every, schedule.count, method.delta, phi);
  return out;
}

std::vector<BenchRow> bench_speedup(const BenchOptions& options) {
  if (options.reps == 0) throw ConfigError("bench needs at least one repetition");
  std::vector<BenchRow> rows;
  for (std::size_t m : options.exponents) {
    if (m == 0 || m > 12) throw ConfigError("bench exponent must lie in [1, 12]");
    const std::size_t side = std::size_t{1} << m;
    const std::size_t n = side * side;
    const double nd = static_cast<double>(n);
    const IsingKac2DModel model(side, options.beta, options.a_scale / nd);
    const double delta_euler = 1.0 / std::sqrt(nd);
    const double delta_mid = 1.0 / std::pow(nd, 0.25);

    std::vector<double> wall_exact, wall_euler, wall_mid, speed_euler, speed_mid;
    for (std::size_t r = 0; r < options.reps; ++r) {
      SimConfig cfg;
      cfg.t_end = options.t_end;
      cfg.seed = replicate_seed(options.seed, r);
      cfg.init = InitSpec::bernoulli(0.5);
      const double we = static_cast<double>(simulate_exact(model, cfg).wall_ns);
      cfg.delta = delta_euler;
      const double wu = static_cast<double>(simulate_euler(model, cfg).wall_ns);
      cfg.delta = delta_mid;
      const double wm = static_cast<double>(simulate_midpoint(model, cfg).wall_ns);
      wall_exact.push_back(we);
      wall_euler.push_back(wu);
      wall_mid.push_back(wm);
      speed_euler.push_back(we / std::max(wu, 1.0));
      speed_mid.push_back(we / std::max(wm, 1.0));
    }
    auto row = [&](const std::string& method, double delta, const std::vector<double>& wall,
                   const std::vector<double>* speed) {
      BenchRow b;
      b.m = m;
      b.n = n;
      b.method = method;
      b.delta = delta;
      b.mean_wall_ns = mean_stderr(wall).mean;
      if (speed != nullptr) {
        const MeanStderr s = mean_stderr(*speed);
        b.speedup_vs_exact = s.mean;
        b.speedup_stderr = s.stderr_;
      }
      b.reps = options.reps;
      rows.push_back(b);
    };
    row("exact", 0.0, wall_exact, nullptr);
    row("euler", delta_euler, wall_euler, &speed_euler);
    row("midpoint", delta_mid, wall_mid, &speed_mid);
  }
  return rows;
}

}  // namespace spinsim
