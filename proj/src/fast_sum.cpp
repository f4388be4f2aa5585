#include "spinsim/fast_sum.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <string>

#include "spinsim/errors.hpp"
#include "spinsim/kernels.hpp"

namespace spinsim {

namespace {

// FFTW planning is not thread-safe; execution on new arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

long wrap(long d, std::size_t period) {
  const long p = static_cast<long>(period);
  long r = d % p;
  return r < 0 ? r + p : r;
}

long minimum_image(long d, std::size_t period) {
  const long p = static_cast<long>(period);
  const long r = wrap(d, period);
  return 2 * r > p ? r - p : r;
}

void check_length(const KernelSpec& k, std::size_t n, const char* what) {
  if (n != k.shape().size()) {
    throw ConfigError(std::string(what) + ": input length " + std::to_string(n) +
                      " does not match lattice size " + std::to_string(k.shape().size()));
  }
}

}  // namespace

// ---------------------------------------------------------------- KernelSpec

KernelSpec::KernelSpec(LatticeShape shape, bool periodic, double normalization)
    : shape_(shape), periodic_(periodic), normalization_(normalization) {
  if (shape.rows == 0 || shape.cols == 0) throw ConfigError("KernelSpec: empty lattice");
  if (!std::isfinite(normalization)) throw ConfigError("KernelSpec: normalization not finite");
  taps_.assign(table_rows() * table_cols(), 0.0);
}

std::size_t KernelSpec::table_rows() const noexcept {
  return periodic_ ? shape_.rows : 2 * shape_.rows - 1;
}

std::size_t KernelSpec::table_cols() const noexcept {
  return periodic_ ? shape_.cols : 2 * shape_.cols - 1;
}

KernelSpec KernelSpec::from_function(LatticeShape shape, bool periodic, double normalization,
                                     const Generator& k) {
  KernelSpec spec(shape, periodic, normalization);
  const std::size_t tc = spec.table_cols();
  for (std::size_t a = 0; a < spec.table_rows(); ++a) {
    for (std::size_t b = 0; b < tc; ++b) {
      long dr = 0;
      long dc = 0;
      if (periodic) {
        dr = minimum_image(static_cast<long>(a), shape.rows);
        dc = minimum_image(static_cast<long>(b), shape.cols);
      } else {
        dr = static_cast<long>(a) - static_cast<long>(shape.rows - 1);
        dc = static_cast<long>(b) - static_cast<long>(shape.cols - 1);
      }
      const double value = k(dr, dc);
      if (!std::isfinite(value)) throw ConfigError("KernelSpec: non-finite tap");
      spec.taps_[a * tc + b] = value;
    }
  }
  return spec;
}

KernelSpec KernelSpec::gaussian(LatticeShape shape, bool periodic, double normalization,
                                double precision) {
  return from_function(shape, periodic, normalization, [precision](long dr, long dc) {
    const double d2 = static_cast<double>(dr * dr + dc * dc);
    return std::exp(-precision * d2);
  });
}

KernelSpec KernelSpec::impulse(LatticeShape shape, bool periodic, double normalization) {
  return from_function(shape, periodic, normalization,
                       [](long dr, long dc) { return dr == 0 && dc == 0 ? 1.0 : 0.0; });
}

double KernelSpec::tap(long dr, long dc) const noexcept {
  if (periodic_) {
    return taps_[static_cast<std::size_t>(wrap(dr, shape_.rows)) * table_cols() +
                 static_cast<std::size_t>(wrap(dc, shape_.cols))];
  }
  const auto a = static_cast<std::size_t>(dr + static_cast<long>(shape_.rows) - 1);
  const auto b = static_cast<std::size_t>(dc + static_cast<long>(shape_.cols) - 1);
  return taps_[a * table_cols() + b];
}

KernelSpec KernelSpec::squared() const {
  KernelSpec out = *this;
  out.normalization_ = normalization_ * normalization_;
  for (double& t : out.taps_) t *= t;
  return out;
}

// -------------------------------------------------------------- FftConvolver

struct FftConvolver::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (forward != nullptr) fftw_destroy_plan(forward);
    if (backward != nullptr) fftw_destroy_plan(backward);
  }
};

FftConvolver::FftConvolver(KernelSpec kernel) : kernel_(std::move(kernel)) {
  const LatticeShape& s = kernel_.shape();
  if (kernel_.periodic()) {
    padded_rows_ = s.rows;
    padded_cols_ = s.cols;
  } else {
    padded_rows_ = s.rows == 1 ? 1 : fft_friendly_size(2 * s.rows - 1);
    padded_cols_ = fft_friendly_size(2 * s.cols - 1);
  }
  const std::size_t real_size = padded_rows_ * padded_cols_;
  const std::size_t half_cols = padded_cols_ / 2 + 1;
  const std::size_t complex_size = padded_rows_ * half_cols;

  plans_ = std::make_unique<Plans>();
  {
    std::lock_guard lock(planner_mutex());
    double* rbuf = fftw_alloc_real(real_size);
    fftw_complex* cbuf = fftw_alloc_complex(complex_size);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    const int pr = static_cast<int>(padded_rows_);
    const int pc = static_cast<int>(padded_cols_);
    if (padded_rows_ == 1) {
      plans_->forward = fftw_plan_dft_r2c_1d(pc, rbuf, cbuf, flags);
      plans_->backward = fftw_plan_dft_c2r_1d(pc, cbuf, rbuf, flags);
    } else {
      plans_->forward = fftw_plan_dft_r2c_2d(pr, pc, rbuf, cbuf, flags);
      plans_->backward = fftw_plan_dft_c2r_2d(pr, pc, cbuf, rbuf, flags);
    }
    fftw_free(rbuf);
    fftw_free(cbuf);
  }
  if (plans_->forward == nullptr || plans_->backward == nullptr) {
    throw std::runtime_error("FftConvolver: FFTW planning failed");
  }

  // Circularly embedded kernel; every tabulated offset lands at its residue.
  std::vector<double> embedded(real_size, 0.0);
  const long rows = static_cast<long>(s.rows);
  const long cols = static_cast<long>(s.cols);
  const long r_lo = kernel_.periodic() ? 0 : -(rows - 1);
  const long c_lo = kernel_.periodic() ? 0 : -(cols - 1);
  for (long dr = r_lo; dr < rows; ++dr) {
    for (long dc = c_lo; dc < cols; ++dc) {
      const auto a = static_cast<std::size_t>(wrap(dr, padded_rows_));
      const auto b = static_cast<std::size_t>(wrap(dc, padded_cols_));
      embedded[a * padded_cols_ + b] = kernel_.tap(dr, dc);
    }
  }
  spectrum_.resize(complex_size);
  fftw_execute_dft_r2c(plans_->forward, embedded.data(),
                       reinterpret_cast<fftw_complex*>(spectrum_.data()));
  const double scale = kernel_.normalization() / static_cast<double>(real_size);
  for (auto& c : spectrum_) c *= scale;
}

FftConvolver::~FftConvolver() = default;

void FftConvolver::apply(std::span<const double> x, std::span<double> out) const {
  run(x, out, false);
}

void FftConvolver::apply_transpose(std::span<const double> x, std::span<double> out) const {
  run(x, out, true);
}

void FftConvolver::run(std::span<const double> x, std::span<double> out, bool transpose) const {
  check_length(kernel_, x.size(), "FftConvolver");
  check_length(kernel_, out.size(), "FftConvolver");
  const LatticeShape& s = kernel_.shape();

  std::vector<double> buffer(padded_rows_ * padded_cols_, 0.0);
  for (std::size_t r = 0; r < s.rows; ++r) {
    for (std::size_t c = 0; c < s.cols; ++c) buffer[r * padded_cols_ + c] = x[r * s.cols + c];
  }
  std::vector<std::complex<double>> freq(spectrum_.size());
  auto* freq_ptr = reinterpret_cast<fftw_complex*>(freq.data());
  fftw_execute_dft_r2c(plans_->forward, buffer.data(), freq_ptr);
  if (transpose) {
    for (std::size_t m = 0; m < freq.size(); ++m) freq[m] *= std::conj(spectrum_[m]);
  } else {
    for (std::size_t m = 0; m < freq.size(); ++m) freq[m] *= spectrum_[m];
  }
  fftw_execute_dft_c2r(plans_->backward, freq_ptr, buffer.data());
  for (std::size_t r = 0; r < s.rows; ++r) {
    for (std::size_t c = 0; c < s.cols; ++c) out[r * s.cols + c] = buffer[r * padded_cols_ + c];
  }
}

// --------------------------------------------------------------- DenseMatrix

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::from_kernel(const KernelSpec& kernel) {
  const LatticeShape& s = kernel.shape();
  const std::size_t n = s.size();
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const long ri = static_cast<long>(i / s.cols);
    const long ci = static_cast<long>(i % s.cols);
    for (std::size_t j = 0; j < n; ++j) {
      const long rj = static_cast<long>(j / s.cols);
      const long cj = static_cast<long>(j % s.cols);
      m(i, j) = kernel.normalization() * kernel.tap(ri - rj, ci - cj);
    }
  }
  return m;
}

// ---------------------------------------------------------- free functions

std::vector<double> sum_dense(const DenseMatrix& weights, std::span<const double> x, Exec exec) {
  if (x.size() != weights.cols) {
    throw ConfigError("sum_dense: input length " + std::to_string(x.size()) +
                      " does not match weight columns " + std::to_string(weights.cols));
  }
  std::vector<double> out(weights.rows);
  if (exec == Exec::serial) {
    kernels::dense_matvec_serial(weights, x, out);
  } else {
    kernels::dense_matvec_parallel(weights, x, out);
  }
  return out;
}

std::vector<double> convolve_fft(const KernelSpec& kernel, std::span<const double> x) {
  check_length(kernel, x.size(), "convolve_fft");
  FftConvolver conv(kernel);
  std::vector<double> out(x.size());
  conv.apply(x, out);
  return out;
}

std::vector<double> convolve_direct(const KernelSpec& kernel, std::span<const double> x,
                                    Exec exec) {
  check_length(kernel, x.size(), "convolve_direct");
  std::vector<double> out(x.size());
  if (exec == Exec::serial) {
    kernels::direct_convolve_serial(kernel, x, out);
  } else {
    kernels::direct_convolve_parallel(kernel, x, out);
  }
  return out;
}

std::size_t fft_friendly_size(std::size_t target) {
  if (target <= 1) return 1;
  for (std::size_t m = target;; ++m) {
    std::size_t r = m;
    for (std::size_t p : {2u, 3u, 5u, 7u}) {
      while (r % p == 0) r /= p;
    }
    if (r == 1) return m;
  }
}

}  // namespace spinsim
