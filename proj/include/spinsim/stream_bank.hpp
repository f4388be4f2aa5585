#pragma once

#include <cstddef>
#include <cstdint>

#include "spinsim/rng.hpp"

namespace spinsim {

enum class Direction : std::uint8_t { up = 0, down = 1 };

/// Position of a consumer inside one unit-rate Poisson stream.
struct StreamCursor {
  std::uint64_t index = 0;
  /// Arrival point number `index` (0-based), strictly increasing in index.
  double next_arrival = 0.0;
};

/// One unit-rate Poisson process per (site, direction), generated lazily from
/// the master seed. Inter-arrival gap k of a stream is a pure function of
/// (seed, site, direction, k), so every process coupled through the bank sees
/// the same arrival points regardless of how far the others have read.
class PoissonStreamBank {
 public:
  explicit PoissonStreamBank(std::uint64_t master_seed) noexcept : rng_(master_seed) {}

  std::uint64_t master_seed() const noexcept { return rng_.key(); }

  double gap(std::size_t site, Direction dir, std::uint64_t index) const noexcept;

  StreamCursor open(std::size_t site, Direction dir) const noexcept;
  void advance(StreamCursor& cursor, std::size_t site, Direction dir) const noexcept;

  /// Arrival point `index` recomputed from scratch; O(index).
  double arrival(std::size_t site, Direction dir, std::uint64_t index) const noexcept;

 private:
  CounterRng rng_;
};

}  // namespace spinsim
