#include "spinsim/spin_state.hpp"

#include <algorithm>
#include <numeric>

#include "spinsim/errors.hpp"

namespace spinsim {

SpinState::SpinState(std::size_t n) : bits_(n, 0) {
  if (n == 0) throw ConfigError("SpinState: site count must be positive");
}

SpinState::SpinState(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  if (bits_.empty()) throw ConfigError("SpinState: site count must be positive");
  if (std::any_of(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b > 1; })) {
    throw ConfigError("SpinState: entries must be 0 or 1");
  }
}

std::size_t SpinState::count_ones() const noexcept {
  return std::accumulate(bits_.begin(), bits_.end(), std::size_t{0});
}

double SpinState::occupancy() const noexcept {
  return static_cast<double>(count_ones()) / static_cast<double>(bits_.size());
}

RealState SpinState::to_real() const {
  return RealState(bits_.begin(), bits_.end());
}

bool is_binary(std::span<const double> x) noexcept {
  return std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0 || v == 1.0; });
}

}  // namespace spinsim
