#pragma once

#include <cstdint>
#include <limits>

namespace spinsim {

/// Stream families. The tag occupies the top byte of a 64-bit stream id so
/// that different consumers of one master seed never collide.
enum class StreamTag : std::uint8_t {
  init = 1,
  grid_step = 2,
  exact = 3,
  poisson_bank = 4,
  tau_leap = 5,
  replicate = 6,
  test = 7,
};

constexpr std::uint64_t make_stream(StreamTag tag, std::uint64_t value) noexcept {
  return (static_cast<std::uint64_t>(tag) << 56) | (value & 0x00ff'ffff'ffff'ffffULL);
}

/// Stateless counter-based generator: every draw is a pure function of
/// (key, stream, counter). Draws for different sites or steps can therefore
/// be taken in any order, or in parallel, with bit-identical results.
class CounterRng {
 public:
  constexpr explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t key() const noexcept { return key_; }

  std::uint64_t bits(std::uint64_t stream, std::uint64_t counter) const noexcept;

  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform(std::uint64_t stream, std::uint64_t counter) const noexcept;

  /// Unit-mean exponential variate.
  double exponential(std::uint64_t stream, std::uint64_t counter) const noexcept;

  /// Derives an independent key, e.g. the master seed of replicate r.
  CounterRng split(std::uint64_t index) const noexcept;

 private:
  std::uint64_t key_;
};

std::uint64_t mix64(std::uint64_t z) noexcept;

/// Sequential view of one stream; satisfies UniformRandomBitGenerator.
class StreamEngine {
 public:
  using result_type = std::uint64_t;

  StreamEngine(const CounterRng& rng, std::uint64_t stream, std::uint64_t start = 0) noexcept
      : rng_(rng), stream_(stream), counter_(start) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept { return rng_.bits(stream_, counter_++); }
  double uniform() noexcept { return rng_.uniform(stream_, counter_++); }
  double exponential() noexcept { return rng_.exponential(stream_, counter_++); }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  CounterRng rng_;
  std::uint64_t stream_;
  std::uint64_t counter_;
};

/// Poisson variate by sequential CDF inversion from a single uniform.
/// Throws DomainError for negative or very large means (> 700).
std::uint64_t poisson_inversion(double mean, double u);

}  // namespace spinsim
