#include "spinsim/rng.hpp"

#include <cmath>
#include <string>

#include "spinsim/errors.hpp"

namespace spinsim {

std::uint64_t mix64(std::uint64_t z) noexcept {
  // splitmix64 finalizer
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t CounterRng::bits(std::uint64_t stream, std::uint64_t counter) const noexcept {
  std::uint64_t h = mix64(key_ ^ 0x6a09e667f3bcc909ULL);
  h = mix64(h ^ stream);
  h = mix64(h ^ (counter * 0xd1342543de82ef95ULL));
  return mix64(h + 0x3c6ef372fe94f82bULL);
}

double CounterRng::uniform(std::uint64_t stream, std::uint64_t counter) const noexcept {
  // 53 random bits centred in their cell: values lie in (0,1).
  const std::uint64_t b = bits(stream, counter) >> 11;
  return (static_cast<double>(b) + 0.5) * 0x1.0p-53;
}

double CounterRng::exponential(std::uint64_t stream, std::uint64_t counter) const noexcept {
  return -std::log(uniform(stream, counter));
}

CounterRng CounterRng::split(std::uint64_t index) const noexcept {
  return CounterRng(mix64(key_ ^ mix64(index + 0x510e527fade682d1ULL)));
}

std::uint64_t poisson_inversion(double mean, double u) {
  if (!(mean >= 0.0) || mean > 700.0) {
    throw DomainError("poisson_inversion: mean out of range: " + std::to_string(mean));
  }
  if (mean == 0.0) return 0;
  double p = std::exp(-mean);
  double cdf = p;
  std::uint64_t k = 0;
  while (u > cdf) {
    ++k;
    p *= mean / static_cast<double>(k);
    const double next = cdf + p;
    if (next == cdf) break;  // tail exhausted in double precision
    cdf = next;
  }
  return k;
}

}  // namespace spinsim
