#pragma once

// Data-parallel inner loops. Every kernel has a serial reference and an
// OpenMP version; the two are required to agree bit for bit.

#include <cstddef>
#include <cstdint>
#include <span>

#include "spinsim/fast_sum.hpp"
#include "spinsim/rng.hpp"

namespace spinsim::kernels {

void dense_matvec_serial(const DenseMatrix& w, std::span<const double> x, std::span<double> out);
void dense_matvec_parallel(const DenseMatrix& w, std::span<const double> x,
                           std::span<double> out);

void direct_convolve_serial(const KernelSpec& k, std::span<const double> x,
                            std::span<double> out);
void direct_convolve_parallel(const KernelSpec& k, std::span<const double> x,
                              std::span<double> out);

/// One step of the site-decoupled scheme: site i becomes 1 with probability
/// transition_probability(up[i], down[i], state[i], delta), using the uniform
/// draw (stream, i) of rng. Writes into next and returns the number of sites
/// whose value changed.
std::size_t decoupled_step_serial(std::span<const double> up, std::span<const double> down,
                                  std::span<const std::uint8_t> state, double delta,
                                  const CounterRng& rng, std::uint64_t stream,
                                  std::span<std::uint8_t> next);
std::size_t decoupled_step_parallel(std::span<const double> up, std::span<const double> down,
                                    std::span<const std::uint8_t> state, double delta,
                                    const CounterRng& rng, std::uint64_t stream,
                                    std::span<std::uint8_t> next);

inline std::size_t decoupled_step(Exec exec, std::span<const double> up,
                                  std::span<const double> down,
                                  std::span<const std::uint8_t> state, double delta,
                                  const CounterRng& rng, std::uint64_t stream,
                                  std::span<std::uint8_t> next) {
  return exec == Exec::serial
             ? decoupled_step_serial(up, down, state, delta, rng, stream, next)
             : decoupled_step_parallel(up, down, state, delta, rng, stream, next);
}

}  // namespace spinsim::kernels
