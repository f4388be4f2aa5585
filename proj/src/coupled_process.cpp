#include "spinsim/coupled_process.hpp"

#include <algorithm>
#include <cmath>

#include "spinsim/errors.hpp"

namespace spinsim {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

CoupledProcess::CoupledProcess(const RateModel& model, MethodSpec spec, const SpinState& init,
                               const PoissonStreamBank& bank)
    : model_(model), spec_(std::move(spec)), bank_(bank), n_(model.size()) {
  if (init.size() != n_) {
    throw ConfigError("initial state has length " + std::to_string(init.size()) +
                      ", model has " + std::to_string(n_));
  }
  if (spec_.method != Method::exact && !(std::isfinite(spec_.delta) && spec_.delta > 0.0)) {
    throw ConfigError("method " + spec_.label + ": delta must be positive and finite");
  }
  if (spec_.method == Method::midpoint) validate_midpoint_step(model_.norm_constants(), spec_.delta);

  x_.assign(init.bits().begin(), init.bits().end());
  ones_ = init.count_ones();
  v_.assign(n_, 0.0);
  up_.assign(n_, 0.0);
  down_.assign(n_, 0.0);
  lambda_up_.assign(n_, 0.0);
  lambda_down_.assign(n_, 0.0);
  t_site_.assign(n_, 0.0);
  cur_up_.resize(n_);
  cur_down_.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    cur_up_[i] = bank_.open(i, Direction::up);
    cur_down_[i] = bank_.open(i, Direction::down);
  }
  next_up_.assign(n_, 0.0);
  next_down_.assign(n_, 0.0);
  scratch_x_.assign(n_, 0.0);
  scratch_z_.assign(n_, 0.0);

  if (spec_.method == Method::exact) {
    for (std::size_t i = 0; i < n_; ++i) scratch_x_[i] = x_[i];
    model_.potentials(scratch_x_, v_);
    model_.rates_from_potentials(v_, next_up_, next_down_);
    fold_rates(0.0);
    rescan();
  } else {
    refresh_grid_rates(0.0);
    next_grid_ = 1;
  }
}

double CoupledProcess::next_time() const noexcept {
  if (spec_.method == Method::exact) return next_flip_;
  return std::min(next_flip_, static_cast<double>(next_grid_) * spec_.delta);
}

double CoupledProcess::candidate(std::size_t i) const noexcept {
  const bool rising = x_[i] == 0;
  const double rate = rising ? up_[i] : down_[i];
  if (!(rate > 0.0)) return kInf;
  const double lambda = rising ? lambda_up_[i] : lambda_down_[i];
  const double arrival = rising ? cur_up_[i].next_arrival : cur_down_[i].next_arrival;
  return t_site_[i] + std::max(0.0, arrival - lambda) / rate;
}

void CoupledProcess::rescan() {
  next_flip_ = kInf;
  next_site_ = n_;
  for (std::size_t i = 0; i < n_; ++i) {
    const double c = candidate(i);
    if (c < next_flip_) {
      next_flip_ = c;
      next_site_ = i;
    }
  }
}

std::optional<std::size_t> CoupledProcess::advance() {
  if (spec_.method != Method::exact) {
    const double grid_time = static_cast<double>(next_grid_) * spec_.delta;
    if (!(next_flip_ <= grid_time)) {
      refresh_grid_rates(grid_time);
      ++next_grid_;
      return std::nullopt;
    }
  }
  if (next_site_ >= n_) throw SolverError("coupled process has no pending event");

  const std::size_t i = next_site_;
  const double t = next_flip_;
  if (x_[i] == 0) {
    lambda_up_[i] = cur_up_[i].next_arrival;
    bank_.advance(cur_up_[i], i, Direction::up);
    ++ones_;
  } else {
    lambda_down_[i] = cur_down_[i].next_arrival;
    bank_.advance(cur_down_[i], i, Direction::down);
    --ones_;
  }
  x_[i] ^= 1;
  t_site_[i] = t;
  ++events_;

  if (spec_.method == Method::exact) {
    recompute_exact_rates_after_flip(i, t);
  } else {
    rescan();
  }
  return i;
}

void CoupledProcess::fold_rates(double t) {
  check_rates(next_up_, next_down_);
  for (std::size_t i = 0; i < n_; ++i) {
    if (x_[i] == 0) {
      if (next_up_[i] != up_[i]) {
        lambda_up_[i] += up_[i] * (t - t_site_[i]);
        t_site_[i] = t;
      }
    } else if (next_down_[i] != down_[i]) {
      lambda_down_[i] += down_[i] * (t - t_site_[i]);
      t_site_[i] = t;
    }
  }
  up_.swap(next_up_);
  down_.swap(next_down_);
}

void CoupledProcess::recompute_exact_rates_after_flip(std::size_t site, double t) {
  if (++since_refresh_ >= n_) {
    for (std::size_t i = 0; i < n_; ++i) scratch_x_[i] = x_[i];
    model_.potentials(scratch_x_, v_);
    since_refresh_ = 0;
  } else {
    model_.shift_potentials(v_, site, x_[site] == 1 ? 1.0 : -1.0);
  }
  model_.rates_from_potentials(v_, next_up_, next_down_);
  fold_rates(t);
  rescan();
}

void CoupledProcess::refresh_grid_rates(double t) {
  for (std::size_t i = 0; i < n_; ++i) scratch_x_[i] = x_[i];
  if (spec_.method == Method::euler) {
    model_.rates(scratch_x_, next_up_, next_down_);
  } else {
    midpoint_predictor(model_, scratch_x_, spec_.delta, scratch_z_);
    model_.rates(scratch_z_, next_up_, next_down_);
  }
  fold_rates(t);
  rescan();
}

}  // namespace spinsim
