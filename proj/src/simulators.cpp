#include "spinsim/simulators.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "spinsim/coupled_process.hpp"
#include "spinsim/errors.hpp"
#include "spinsim/kernels.hpp"
#include "spinsim/rng.hpp"
#include "spinsim/stream_bank.hpp"

namespace spinsim {

namespace {

constexpr double kPredictorTolerance = 1e-9;

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void require_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ConfigError(std::string(what) + " must lie in [0,1], got " + shortest(p));
  }
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  std::int64_t elapsed_ns() const {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

class Recorder {
 public:
  Recorder(const SampleSchedule& schedule, bool snapshots, std::size_t n)
      : schedule_(schedule), snapshots_(snapshots), n_(n) {
    rec_.times.reserve(schedule.count);
    rec_.occupancy.reserve(schedule.count);
    rec_.events_cum.reserve(schedule.count);
  }

  std::size_t recorded() const noexcept { return rec_.times.size(); }
  bool done() const noexcept { return recorded() >= schedule_.count; }
  double next_time() const noexcept { return schedule_.time(recorded()); }

  void record(std::span<const std::uint8_t> x, std::size_t ones, std::uint64_t events) {
    rec_.times.push_back(schedule_.time(recorded()));
    rec_.occupancy.push_back(static_cast<double>(ones) / static_cast<double>(n_));
    rec_.events_cum.push_back(events);
    if (snapshots_) rec_.snapshots.emplace_back(std::vector<std::uint8_t>(x.begin(), x.end()));
  }

  TrajectoryRecord finish(std::uint64_t events, std::int64_t wall_ns) {
    rec_.event_count = events;
    rec_.wall_ns = wall_ns;
    return std::move(rec_);
  }

 private:
  SampleSchedule schedule_;
  bool snapshots_;
  std::size_t n_;
  TrajectoryRecord rec_;
};

std::size_t grid_steps(const SimConfig& cfg) {
  return static_cast<std::size_t>(std::ceil(cfg.t_end / cfg.delta - 1e-9));
}

std::size_t count_ones(std::span<const std::uint8_t> x) {
  return static_cast<std::size_t>(std::count(x.begin(), x.end(), std::uint8_t{1}));
}

void to_real(std::span<const std::uint8_t> x, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i];
}

// Shared driver of the grid schemes: rates_at(k, x, up, down) fills the
// frozen rates for step k, then every site is resampled independently.
template <typename RatesAt>
TrajectoryRecord run_grid(const RateModel& model, const SimConfig& cfg, RatesAt&& rates_at) {
  const SampleSchedule schedule = resolve_schedule(cfg, true);
  const std::size_t n = model.size();
  Stopwatch watch;
  SpinState init = make_initial_state(cfg.init, n, cfg.seed);
  std::vector<std::uint8_t> x(init.bits().begin(), init.bits().end());
  std::vector<std::uint8_t> next(n);
  std::vector<double> up(n), down(n);
  const CounterRng rng(cfg.seed);
  Recorder rec(schedule, cfg.record_snapshots, n);
  std::uint64_t events = 0;
  std::size_t ones = count_ones(x);
  rec.record(x, ones, events);

  const std::size_t steps = grid_steps(cfg);
  for (std::size_t k = 0; k < steps; ++k) {
    rates_at(k, std::span<const std::uint8_t>(x), std::span<double>(up), std::span<double>(down));
    check_rates(up, down);
    events += kernels::decoupled_step(cfg.exec, up, down, x, cfg.delta, rng,
                                      make_stream(StreamTag::grid_step, k), next);
    x.swap(next);
    if ((k + 1) % schedule.stride == 0 && !rec.done()) {
      ones = count_ones(x);
      rec.record(x, ones, events);
    }
  }
  return rec.finish(events, watch.elapsed_ns());
}

TrajectoryRecord run_time_change(const RateModel& model, const SimConfig& cfg, Method method,
                                 const PoissonStreamBank& bank) {
  const bool grid = method != Method::exact;
  const SampleSchedule schedule = resolve_schedule(cfg, grid);
  const std::size_t n = model.size();
  Stopwatch watch;
  CoupledProcess proc(model, MethodSpec{method, cfg.delta, method_name(method)},
                      make_initial_state(cfg.init, n, cfg.seed), bank);
  Recorder rec(schedule, cfg.record_snapshots, n);
  while (true) {
    const double t_next = proc.next_time();
    while (!rec.done() && rec.next_time() < t_next) {
      rec.record(proc.state(), proc.ones(), proc.event_count());
    }
    if (rec.done()) break;
    proc.advance();
  }
  return rec.finish(proc.event_count(), watch.elapsed_ns());
}

}  // namespace

double transition_probability(double q_up, double q_down, int eta_i, double delta) {
  if (!(std::isfinite(q_up) && q_up >= 0.0) || !(std::isfinite(q_down) && q_down >= 0.0)) {
    throw DomainError("transition_probability: rates must be finite and nonnegative");
  }
  if (!(std::isfinite(delta) && delta >= 0.0)) {
    throw DomainError("transition_probability: delta must be finite and nonnegative");
  }
  if (eta_i != 0 && eta_i != 1) throw DomainError("transition_probability: eta_i must be 0 or 1");
  return detail::transition_probability_unchecked(q_up, q_down, eta_i, delta);
}

Method parse_method(const std::string& name) {
  if (name == "exact") return Method::exact;
  if (name == "euler") return Method::euler;
  if (name == "midpoint") return Method::midpoint;
  throw ConfigError("unknown method \"" + name + "\" (expected exact, euler or midpoint)");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::exact: return "exact";
    case Method::euler: return "euler";
    case Method::midpoint: return "midpoint";
  }
  return "unknown";
}

InitSpec InitSpec::bernoulli(double p) {
  require_probability(p, "init probability");
  InitSpec s;
  s.kind = Kind::bernoulli;
  s.p = p;
  return s;
}

InitSpec InitSpec::fraction(double p) {
  require_probability(p, "init fraction");
  InitSpec s;
  s.kind = Kind::fraction;
  s.p = p;
  return s;
}

InitSpec InitSpec::explicit_state(const SpinState& state) {
  InitSpec s;
  s.kind = Kind::explicit_bits;
  s.bits.assign(state.bits().begin(), state.bits().end());
  return s;
}

InitSpec InitSpec::profile(std::vector<double> probabilities) {
  for (double p : probabilities) require_probability(p, "init profile entry");
  InitSpec s;
  s.kind = Kind::profile;
  s.probabilities = std::move(probabilities);
  return s;
}

InitSpec InitSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw ConfigError("init \"" + text + "\": expected bernoulli:<p> or fraction:<p>");
  }
  const std::string kind = text.substr(0, colon);
  const std::string value = text.substr(colon + 1);
  double p = 0.0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), p);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
    throw ConfigError("init \"" + text + "\": \"" + value + "\" is not a number");
  }
  if (kind == "bernoulli") return bernoulli(p);
  if (kind == "fraction") return fraction(p);
  throw ConfigError("init \"" + text + "\": unknown kind \"" + kind + "\"");
}

std::string InitSpec::describe() const {
  switch (kind) {
    case Kind::bernoulli: return "bernoulli:" + shortest(p);
    case Kind::fraction: return "fraction:" + shortest(p);
    case Kind::explicit_bits: return "explicit";
    case Kind::profile: return "profile";
  }
  return "unknown";
}

SpinState make_initial_state(const InitSpec& init, std::size_t n, std::uint64_t seed) {
  SpinState s(n);
  const CounterRng rng(seed);
  const std::uint64_t stream = make_stream(StreamTag::init, 0);
  switch (init.kind) {
    case InitSpec::Kind::bernoulli:
      for (std::size_t i = 0; i < n; ++i) s.set(i, rng.uniform(stream, i) < init.p);
      break;
    case InitSpec::Kind::fraction: {
      const auto k = static_cast<std::size_t>(std::floor(init.p * static_cast<double>(n)));
      for (std::size_t j = 0; j < k; ++j) s.set(j * n / k, true);
      break;
    }
    case InitSpec::Kind::explicit_bits:
      if (init.bits.size() != n) {
        throw ConfigError("explicit initial state has length " +
                          std::to_string(init.bits.size()) + ", model has " + std::to_string(n));
      }
      s = SpinState(init.bits);
      break;
    case InitSpec::Kind::profile:
      if (init.probabilities.size() != n) {
        throw ConfigError("initial profile has length " +
                          std::to_string(init.probabilities.size()) + ", model has " +
                          std::to_string(n));
      }
      for (std::size_t i = 0; i < n; ++i) s.set(i, rng.uniform(stream, i) < init.probabilities[i]);
      break;
  }
  return s;
}

RealState initial_mean(const InitSpec& init, std::size_t n) {
  switch (init.kind) {
    case InitSpec::Kind::bernoulli: return RealState(n, init.p);
    case InitSpec::Kind::profile:
      if (init.probabilities.size() != n) throw ConfigError("initial profile length mismatch");
      return init.probabilities;
    case InitSpec::Kind::fraction:
    case InitSpec::Kind::explicit_bits: return make_initial_state(init, n, 0).to_real();
  }
  return RealState(n, 0.0);
}

SampleSchedule resolve_schedule(const SimConfig& cfg, bool uses_grid) {
  if (!(std::isfinite(cfg.t_end) && cfg.t_end > 0.0)) {
    throw ConfigError("t_end must be positive and finite, got " + shortest(cfg.t_end));
  }
  const bool has_delta = cfg.delta > 0.0;
  if (uses_grid && !(std::isfinite(cfg.delta) && has_delta)) {
    throw ConfigError("delta must be positive and finite, got " + shortest(cfg.delta));
  }
  SampleSchedule s;
  if (cfg.sample_every > 0.0) {
    s.every = cfg.sample_every;
  } else if (cfg.sample_every == 0.0) {
    s.every = has_delta ? 10.0 * cfg.delta : cfg.t_end / 100.0;
  } else {
    throw ConfigError("sample_every must be nonnegative");
  }
  if (!std::isfinite(s.every)) throw ConfigError("sample_every must be finite");
  if (uses_grid) {
    const double ratio = s.every / cfg.delta;
    const double stride = std::round(ratio);
    if (stride < 1.0 || std::abs(ratio - stride) > 1e-9 * std::max(1.0, ratio)) {
      throw ConfigError("sample_every (" + shortest(s.every) +
                        ") must be a positive integer multiple of delta (" +
                        shortest(cfg.delta) + ")");
    }
    s.stride = static_cast<std::size_t>(stride);
    s.every = stride * cfg.delta;
  }
  s.count = static_cast<std::size_t>(std::floor(cfg.t_end / s.every + 1e-9)) + 1;
  return s;
}

void check_rates(std::span<const double> up, std::span<const double> down) {
  for (std::size_t i = 0; i < up.size(); ++i) {
    if (!(std::isfinite(up[i]) && up[i] >= 0.0 && std::isfinite(down[i]) && down[i] >= 0.0)) {
      throw ModelError("model produced an invalid rate at site " + std::to_string(i) +
                       " (up=" + shortest(up[i]) + ", down=" + shortest(down[i]) + ")");
    }
  }
}

void validate_midpoint_step(const NormConstants& norms, double delta) {
  if (norms.q_inf > 0.0 && delta * norms.q_inf > 2.0 * (1.0 + 1e-12)) {
    throw ConfigError("midpoint step delta=" + shortest(delta) +
                      " exceeds the stability bound 2/||q||_inf = " +
                      shortest(2.0 / norms.q_inf));
  }
}

void midpoint_predictor(const RateModel& model, std::span<const double> x, double delta,
                        std::span<double> out) {
  model.drift(x, out);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double p = x[i] + 0.5 * delta * out[i];
    if (!(p >= -kPredictorTolerance && p <= 1.0 + kPredictorTolerance)) {
      throw ModelError("midpoint predictor left [0,1] at site " + std::to_string(i) + " (" +
                       shortest(p) + "); reduce delta");
    }
    out[i] = std::clamp(p, 0.0, 1.0);
  }
}

TrajectoryRecord simulate_exact(const RateModel& model, const SimConfig& cfg) {
  const SampleSchedule schedule = resolve_schedule(cfg, false);
  const std::size_t n = model.size();
  Stopwatch watch;
  SpinState init = make_initial_state(cfg.init, n, cfg.seed);
  std::vector<std::uint8_t> x(init.bits().begin(), init.bits().end());
  std::vector<double> xr(n), v(n), up(n), down(n), rate(n);
  to_real(x, xr);
  model.potentials(xr, v);

  StreamEngine engine(CounterRng(cfg.seed), make_stream(StreamTag::exact, 0));
  Recorder rec(schedule, cfg.record_snapshots, n);
  std::size_t ones = count_ones(x);
  std::uint64_t events = 0;
  std::uint64_t since_refresh = 0;
  double t = 0.0;

  while (true) {
    model.rates_from_potentials(v, up, down);
    check_rates(up, down);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      rate[i] = x[i] == 0 ? up[i] : down[i];
      total += rate[i];
    }
    const double t_next =
        total > 0.0 ? t + engine.exponential() / total : std::numeric_limits<double>::infinity();
    while (!rec.done() && rec.next_time() < t_next) rec.record(x, ones, events);
    if (rec.done()) break;

    const double target = engine.uniform() * total;
    std::size_t site = n;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (rate[i] <= 0.0) continue;
      acc += rate[i];
      site = i;
      if (target < acc) break;
    }
    const double dx = x[site] == 0 ? 1.0 : -1.0;
    x[site] ^= 1;
    ones = dx > 0 ? ones + 1 : ones - 1;
    ++events;
    t = t_next;
    if (++since_refresh >= n) {
      to_real(x, xr);
      model.potentials(xr, v);
      since_refresh = 0;
    } else {
      model.shift_potentials(v, site, dx);
    }
  }
  return rec.finish(events, watch.elapsed_ns());
}

TrajectoryRecord simulate_euler(const RateModel& model, const SimConfig& cfg) {
  std::vector<double> xr(model.size());
  return run_grid(model, cfg, [&](std::size_t, std::span<const std::uint8_t> x,
                                  std::span<double> up, std::span<double> down) {
    to_real(x, xr);
    model.rates(xr, up, down);
  });
}

TrajectoryRecord simulate_midpoint(const RateModel& model, const SimConfig& cfg) {
  if (cfg.delta > 0.0) validate_midpoint_step(model.norm_constants(), cfg.delta);
  std::vector<double> xr(model.size()), z(model.size());
  return run_grid(model, cfg, [&](std::size_t, std::span<const std::uint8_t> x,
                                  std::span<double> up, std::span<double> down) {
    to_real(x, xr);
    midpoint_predictor(model, xr, cfg.delta, z);
    model.rates(z, up, down);
  });
}

TrajectoryRecord simulate_exact(const RateModel& model, const SimConfig& cfg,
                                const PoissonStreamBank& bank) {
  return run_time_change(model, cfg, Method::exact, bank);
}

TrajectoryRecord simulate_euler(const RateModel& model, const SimConfig& cfg,
                                const PoissonStreamBank& bank) {
  return run_time_change(model, cfg, Method::euler, bank);
}

TrajectoryRecord simulate_midpoint(const RateModel& model, const SimConfig& cfg,
                                   const PoissonStreamBank& bank) {
  return run_time_change(model, cfg, Method::midpoint, bank);
}

TrajectoryRecord simulate_independent_sites(const RateModel& model, const SimConfig& cfg,
                                            const RhoProvider& rho) {
  std::vector<double> r(model.size());
  return run_grid(model, cfg, [&](std::size_t k, std::span<const std::uint8_t>,
                                  std::span<double> up, std::span<double> down) {
    rho(k, static_cast<double>(k) * cfg.delta, r);
    model.rates(r, up, down);
  });
}

TauLeapResult simulate_poisson_tau_leap(const RateModel& model, const SimConfig& cfg) {
  const SampleSchedule schedule = resolve_schedule(cfg, true);
  const std::size_t n = model.size();
  Stopwatch watch;
  SpinState init = make_initial_state(cfg.init, n, cfg.seed);
  std::vector<std::uint8_t> x(init.bits().begin(), init.bits().end());
  std::vector<double> xr(n), up(n), down(n);
  const CounterRng rng(cfg.seed);
  Recorder rec(schedule, cfg.record_snapshots, n);
  TauLeapResult result;
  std::uint64_t events = 0;
  rec.record(x, count_ones(x), events);

  const std::size_t steps = grid_steps(cfg);
  for (std::size_t k = 0; k < steps; ++k) {
    to_real(x, xr);
    model.rates(xr, up, down);
    check_rates(up, down);
    const std::uint64_t stream = make_stream(StreamTag::tau_leap, k);
    std::uint64_t invalid = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double mean_up = cfg.delta * (1.0 - xr[i]) * up[i];
      const double mean_down = cfg.delta * xr[i] * down[i];
      const auto births = poisson_inversion(mean_up, rng.uniform(stream, 2 * i));
      const auto deaths = poisson_inversion(mean_down, rng.uniform(stream, 2 * i + 1));
      const auto value = static_cast<std::int64_t>(x[i]) + static_cast<std::int64_t>(births) -
                         static_cast<std::int64_t>(deaths);
      if (value < 0 || value > 1) ++invalid;
      const std::uint8_t clamped = value <= 0 ? 0 : 1;
      if (clamped != x[i]) ++events;
      x[i] = clamped;
    }
    result.invalid_state_count += invalid;
    if (invalid > 0) ++result.invalid_step_count;
    if ((k + 1) % schedule.stride == 0 && !rec.done()) rec.record(x, count_ones(x), events);
  }
  result.steps = steps;
  result.record = rec.finish(events, watch.elapsed_ns());
  return result;
}

}  // namespace spinsim
