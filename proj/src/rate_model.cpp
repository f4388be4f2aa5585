#include "spinsim/rate_model.hpp"

#include <string>

#include "spinsim/errors.hpp"

namespace spinsim {

void RateModel::require_length(std::size_t got, const char* what) const {
  if (got != size()) {
    throw ConfigError(name() + ": " + what + " has length " + std::to_string(got) +
                      ", expected " + std::to_string(size()));
  }
}

void RateModel::rates_from_potentials(std::span<const double> v, std::span<double> up,
                                      std::span<double> down) const {
  for (std::size_t i = 0; i < v.size(); ++i) {
    up[i] = rate_up(i, v[i]);
    down[i] = rate_down(i, v[i]);
  }
}

std::vector<double> RateModel::potentials(std::span<const double> x) const {
  std::vector<double> v(size());
  potentials(x, v);
  return v;
}

void RateModel::rates(std::span<const double> x, std::span<double> up,
                      std::span<double> down) const {
  std::vector<double> v(size());
  potentials(x, v);
  rates_from_potentials(v, up, down);
}

std::vector<double> RateModel::rates_up(std::span<const double> x) const {
  std::vector<double> up(size());
  std::vector<double> down(size());
  rates(x, up, down);
  return up;
}

std::vector<double> RateModel::rates_down(std::span<const double> x) const {
  std::vector<double> up(size());
  std::vector<double> down(size());
  rates(x, up, down);
  return down;
}

void RateModel::drift(std::span<const double> x, std::span<double> out) const {
  std::vector<double> up(size());
  std::vector<double> down(size());
  rates(x, up, down);
  for (std::size_t i = 0; i < size(); ++i) out[i] = (1.0 - x[i]) * up[i] - x[i] * down[i];
}

std::vector<double> RateModel::drift(std::span<const double> x) const {
  std::vector<double> out(size());
  drift(x, out);
  return out;
}

std::vector<double> RateModel::jacobian_apply(std::span<const double> x,
                                              std::span<const double> w,
                                              bool off_diagonal) const {
  std::vector<double> out(size());
  jacobian_apply(x, w, out, off_diagonal);
  return out;
}

double rate_function(const RateModel& model, const SpinState& eta, std::size_t i) {
  if (eta.size() != model.size()) {
    throw ConfigError("rate_function: state length does not match model size");
  }
  if (i >= eta.size()) throw ConfigError("rate_function: site index out of range");
  const RealState x = eta.to_real();
  const std::vector<double> v = model.potentials(x);
  return eta[i] == 1 ? model.rate_down(i, v[i]) : model.rate_up(i, v[i]);
}

}  // namespace spinsim
