#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "spinsim/parallel.hpp"

namespace spinsim {

/// Extents of a regular site lattice; a 1-D lattice has rows == 1.
struct LatticeShape {
  std::size_t rows = 1;
  std::size_t cols = 0;

  std::size_t size() const noexcept { return rows * cols; }
  int dims() const noexcept { return rows == 1 ? 1 : 2; }
  friend bool operator==(const LatticeShape&, const LatticeShape&) = default;
};

/// Translation-invariant weights s_ij = normalization * k(i - j) on a lattice.
///
/// Taps are tabulated over every offset that can occur on the lattice, so
/// nothing is truncated. In periodic mode offsets are wrapped and the
/// generator is evaluated at the minimum-image offset.
class KernelSpec {
 public:
  using Generator = std::function<double(long dr, long dc)>;

  static KernelSpec from_function(LatticeShape shape, bool periodic, double normalization,
                                  const Generator& k);

  /// k(d) = exp(-precision * |d|^2) with d measured in lattice units.
  static KernelSpec gaussian(LatticeShape shape, bool periodic, double normalization,
                             double precision);

  /// Kernel with k(0) = 1 and every other tap zero.
  static KernelSpec impulse(LatticeShape shape, bool periodic, double normalization);

  const LatticeShape& shape() const noexcept { return shape_; }
  int dims() const noexcept { return shape_.dims(); }
  bool periodic() const noexcept { return periodic_; }
  double normalization() const noexcept { return normalization_; }

  /// Unnormalised tap for the signed offset (dr, dc).
  double tap(long dr, long dc) const noexcept;

  /// Copy of this kernel with every tap squared (normalization squared too).
  KernelSpec squared() const;

 private:
  KernelSpec(LatticeShape shape, bool periodic, double normalization);

  std::size_t table_rows() const noexcept;
  std::size_t table_cols() const noexcept;

  LatticeShape shape_;
  bool periodic_;
  double normalization_;
  std::vector<double> taps_;
};

/// Convolution with a lattice kernel via FFTW.
///
/// The kernel spectrum and the FFT plans are built once. apply() is
/// re-entrant: plans are executed on per-call buffers, so one instance can
/// serve concurrent callers.
class FftConvolver {
 public:
  explicit FftConvolver(KernelSpec kernel);
  ~FftConvolver();
  FftConvolver(const FftConvolver&) = delete;
  FftConvolver& operator=(const FftConvolver&) = delete;

  const KernelSpec& kernel() const noexcept { return kernel_; }

  /// out_i = normalization * sum_j k(i - j) x_j.
  void apply(std::span<const double> x, std::span<double> out) const;
  /// out_i = normalization * sum_j k(j - i) x_j (the transposed map).
  void apply_transpose(std::span<const double> x, std::span<double> out) const;

  std::size_t padded_rows() const noexcept { return padded_rows_; }
  std::size_t padded_cols() const noexcept { return padded_cols_; }

 private:
  void run(std::span<const double> x, std::span<double> out, bool transpose) const;

  KernelSpec kernel_;
  std::size_t padded_rows_ = 1;
  std::size_t padded_cols_ = 1;
  std::vector<std::complex<double>> spectrum_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

/// Row-major n x m matrix of interaction weights.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

  static DenseMatrix identity(std::size_t n);
  /// Materialises the weights of a lattice kernel (O(n^2) memory).
  static DenseMatrix from_kernel(const KernelSpec& kernel);
};

/// Exact double-loop summation v_i = sum_j w_ij x_j.
std::vector<double> sum_dense(const DenseMatrix& weights, std::span<const double> x,
                              Exec exec = Exec::parallel);

/// Convolution with the FFT (builds a one-shot convolver).
std::vector<double> convolve_fft(const KernelSpec& kernel, std::span<const double> x);

/// O(n^2) direct evaluation of the same convolution; the reference for
/// every fast lattice path.
std::vector<double> convolve_direct(const KernelSpec& kernel, std::span<const double> x,
                                    Exec exec = Exec::parallel);

/// Smallest m >= target whose only prime factors are 2, 3, 5, 7.
std::size_t fft_friendly_size(std::size_t target);

}  // namespace spinsim
