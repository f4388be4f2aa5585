#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace spinsim {

/// Occupancy probabilities or relaxed states in [0,1]^n.
using RealState = std::vector<double>;

/// A configuration in {0,1}^n. The length is fixed at construction.
class SpinState {
 public:
  explicit SpinState(std::size_t n);
  /// Throws ConfigError if any entry is not 0 or 1.
  explicit SpinState(std::vector<std::uint8_t> bits);

  std::size_t size() const noexcept { return bits_.size(); }
  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  void set(std::size_t i, bool value) { bits_[i] = value ? 1 : 0; }
  void flip(std::size_t i) { bits_[i] ^= 1; }

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::size_t count_ones() const noexcept;
  double occupancy() const noexcept;
  RealState to_real() const;

  friend bool operator==(const SpinState&, const SpinState&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// True iff every entry of x is exactly 0.0 or 1.0.
bool is_binary(std::span<const double> x) noexcept;

}  // namespace spinsim
