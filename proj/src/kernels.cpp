#include "spinsim/kernels.hpp"

#include <omp.h>

#include "spinsim/two_state.hpp"

namespace spinsim::kernels {

namespace {

inline double dense_row(const DenseMatrix& w, std::span<const double> x, std::size_t i) {
  const double* row = w.values.data() + i * w.cols;
  double acc = 0.0;
  for (std::size_t j = 0; j < w.cols; ++j) acc += row[j] * x[j];
  return acc;
}

inline double convolve_site(const KernelSpec& k, std::span<const double> x, std::size_t i) {
  const LatticeShape& s = k.shape();
  const long ri = static_cast<long>(i / s.cols);
  const long ci = static_cast<long>(i % s.cols);
  double acc = 0.0;
  std::size_t j = 0;
  for (std::size_t rj = 0; rj < s.rows; ++rj) {
    for (std::size_t cj = 0; cj < s.cols; ++cj, ++j) {
      if (x[j] == 0.0) continue;
      acc += k.tap(ri - static_cast<long>(rj), ci - static_cast<long>(cj)) * x[j];
    }
  }
  return k.normalization() * acc;
}

inline std::uint8_t sample_site(std::span<const double> up, std::span<const double> down,
                                std::span<const std::uint8_t> state, double delta,
                                const CounterRng& rng, std::uint64_t stream, std::size_t i) {
  const double p = detail::transition_probability_unchecked(up[i], down[i], state[i], delta);
  return rng.uniform(stream, i) < p ? 1 : 0;
}

}  // namespace

void dense_matvec_serial(const DenseMatrix& w, std::span<const double> x, std::span<double> out) {
  for (std::size_t i = 0; i < w.rows; ++i) out[i] = dense_row(w, x, i);
}

void dense_matvec_parallel(const DenseMatrix& w, std::span<const double> x,
                           std::span<double> out) {
  const auto rows = static_cast<long>(w.rows);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < rows; ++i) out[i] = dense_row(w, x, static_cast<std::size_t>(i));
}

void direct_convolve_serial(const KernelSpec& k, std::span<const double> x,
                            std::span<double> out) {
  const std::size_t n = k.shape().size();
  for (std::size_t i = 0; i < n; ++i) out[i] = convolve_site(k, x, i);
}

void direct_convolve_parallel(const KernelSpec& k, std::span<const double> x,
                              std::span<double> out) {
  const auto n = static_cast<long>(k.shape().size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) out[i] = convolve_site(k, x, static_cast<std::size_t>(i));
}

std::size_t decoupled_step_serial(std::span<const double> up, std::span<const double> down,
                                  std::span<const std::uint8_t> state, double delta,
                                  const CounterRng& rng, std::uint64_t stream,
                                  std::span<std::uint8_t> next) {
  std::size_t changed = 0;
  for (std::size_t i = 0; i < state.size(); ++i) {
    next[i] = sample_site(up, down, state, delta, rng, stream, i);
    changed += next[i] != state[i];
  }
  return changed;
}

std::size_t decoupled_step_parallel(std::span<const double> up, std::span<const double> down,
                                    std::span<const std::uint8_t> state, double delta,
                                    const CounterRng& rng, std::uint64_t stream,
                                    std::span<std::uint8_t> next) {
  const auto n = static_cast<long>(state.size());
  long changed = 0;
#pragma omp parallel for schedule(static) reduction(+ : changed)
  for (long i = 0; i < n; ++i) {
    const auto s = static_cast<std::size_t>(i);
    next[s] = sample_site(up, down, state, delta, rng, stream, s);
    changed += next[s] != state[s];
  }
  return static_cast<std::size_t>(changed);
}

}  // namespace spinsim::kernels
