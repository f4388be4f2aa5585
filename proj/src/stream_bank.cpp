#include "spinsim/stream_bank.hpp"

#include <cmath>
#include <limits>

namespace spinsim {

namespace {

std::uint64_t stream_id(std::size_t site, Direction dir) noexcept {
  return make_stream(StreamTag::poisson_bank,
                     2 * static_cast<std::uint64_t>(site) + static_cast<std::uint64_t>(dir));
}

// Keeps arrival points strictly increasing even when a gap underflows the
// spacing of doubles at the current magnitude.
double next_point(double previous, double gap) noexcept {
  const double next = previous + gap;
  return next > previous ? next : std::nextafter(previous, std::numeric_limits<double>::infinity());
}

}  // namespace

double PoissonStreamBank::gap(std::size_t site, Direction dir, std::uint64_t index) const noexcept {
  return rng_.exponential(stream_id(site, dir), index);
}

StreamCursor PoissonStreamBank::open(std::size_t site, Direction dir) const noexcept {
  return StreamCursor{0, gap(site, dir, 0)};
}

void PoissonStreamBank::advance(StreamCursor& cursor, std::size_t site,
                                Direction dir) const noexcept {
  ++cursor.index;
  cursor.next_arrival = next_point(cursor.next_arrival, gap(site, dir, cursor.index));
}

double PoissonStreamBank::arrival(std::size_t site, Direction dir,
                                  std::uint64_t index) const noexcept {
  double t = gap(site, dir, 0);
  for (std::uint64_t k = 1; k <= index; ++k) t = next_point(t, gap(site, dir, k));
  return t;
}

}  // namespace spinsim
