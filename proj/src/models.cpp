#include "spinsim/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "spinsim/errors.hpp"

namespace spinsim {

namespace {

// sup over the real line of |tanh''|, rounded up (exact value 4 / (3 sqrt 3)).
constexpr double kTanhSecondDerivativeBound = 0.7699;

double max_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

double nonneg(double v) { return v > 0.0 ? v : 0.0; }

}  // namespace

// ---------------------------------------------------------- LatticePotential

LatticePotential::LatticePotential(KernelSpec kernel, SumMethod method)
    : conv_(std::move(kernel)), method_(method) {}

void LatticePotential::apply(std::span<const double> x, std::span<double> out) const {
  if (method_ == SumMethod::fft) {
    conv_.apply(x, out);
  } else {
    const std::vector<double> v = convolve_direct(kernel(), x);
    std::copy(v.begin(), v.end(), out.begin());
  }
}

void LatticePotential::add_column(std::span<double> v, std::size_t j, double scale) const {
  const KernelSpec& k = kernel();
  const LatticeShape& s = k.shape();
  const double c = k.normalization() * scale;
  const long rj = static_cast<long>(j / s.cols);
  const long cj = static_cast<long>(j % s.cols);
  std::size_t i = 0;
  for (long ri = 0; ri < static_cast<long>(s.rows); ++ri) {
    for (long ci = 0; ci < static_cast<long>(s.cols); ++ci, ++i) {
      v[i] += c * k.tap(ri - rj, ci - cj);
    }
  }
}

double LatticePotential::diagonal() const noexcept {
  return kernel().normalization() * kernel().tap(0, 0);
}

std::vector<double> LatticePotential::row_sums() const {
  const std::vector<double> ones(kernel().shape().size(), 1.0);
  return convolve_fft(kernel(), ones);
}

std::vector<double> LatticePotential::row_square_sums() const {
  const std::vector<double> ones(kernel().shape().size(), 1.0);
  return convolve_fft(kernel().squared(), ones);
}

// ---------------------------------------------------------- GaussConv1DModel

namespace {

KernelSpec gauss_conv_kernel(std::size_t n, double sigma, bool periodic) {
  if (n == 0) throw ConfigError("gauss-conv-1d: n must be positive");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ConfigError("gauss-conv-1d: sigma must be positive");
  }
  const double nd = static_cast<double>(n);
  const double normalization = 2.0 * sigma / (nd * std::sqrt(std::numbers::pi));
  const double precision = (sigma / nd) * (sigma / nd);
  return KernelSpec::gaussian(LatticeShape{1, n}, periodic, normalization, precision);
}

}  // namespace

GaussConv1DModel::GaussConv1DModel(std::size_t n, double sigma, double death_rate, bool periodic,
                                   SumMethod method)
    : n_(n),
      sigma_(sigma),
      death_rate_(death_rate),
      periodic_(periodic),
      potential_(gauss_conv_kernel(n, sigma, periodic), method) {
  if (!(death_rate >= 0.0) || !std::isfinite(death_rate)) {
    throw ConfigError("gauss-conv-1d: death_rate must be nonnegative");
  }
}

void GaussConv1DModel::potentials(std::span<const double> x, std::span<double> v) const {
  require_length(x.size(), "state");
  potential_.apply(x, v);
}

void GaussConv1DModel::shift_potentials(std::span<double> v, std::size_t j, double dx) const {
  potential_.add_column(v, j, dx);
}

void GaussConv1DModel::rates_from_potentials(std::span<const double> v, std::span<double> up,
                                             std::span<double> down) const {
  // FFT round-off can leave tiny negative values where x has no support.
  for (std::size_t i = 0; i < v.size(); ++i) up[i] = nonneg(v[i]);
  std::fill(down.begin(), down.end(), death_rate_);
}

void GaussConv1DModel::jacobian_apply(std::span<const double> x, std::span<const double> w,
                                      std::span<double> out, bool off_diagonal) const {
  require_length(x.size(), "state");
  require_length(w.size(), "weights");
  // d_j drift_i = (1 - x_i) s_ij - [i == j] (q_i^+ + mu)
  potential_.apply(w, out);
  if (off_diagonal) {
    const double s0 = potential_.diagonal();
    for (std::size_t i = 0; i < n_; ++i) out[i] = (1.0 - x[i]) * (out[i] - s0 * w[i]);
    return;
  }
  std::vector<double> q_up(n_);
  potential_.apply(x, q_up);
  for (std::size_t i = 0; i < n_; ++i) {
    out[i] = (1.0 - x[i]) * out[i] - (nonneg(q_up[i]) + death_rate_) * w[i];
  }
}

NormConstants GaussConv1DModel::norm_constants() const {
  const std::vector<double> rows = potential_.row_sums();
  const std::vector<double> squares = potential_.row_square_sums();
  const double s0 = potential_.diagonal();

  NormConstants c;
  double max_row = 0.0;
  double max_offdiag = 0.0;
  double max_full = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const double offdiag = nonneg(rows[i] - s0);
    max_row = std::max(max_row, rows[i]);
    max_offdiag = std::max(max_offdiag, offdiag);
    // sup |d_i drift_i| = q_i^+(1) + mu, attained at x = 1.
    max_full = std::max(max_full, offdiag + rows[i] + death_rate_);
    c.dstar_q_21 += std::sqrt(nonneg(squares[i] - s0 * s0));
  }
  // q^+ is increasing in x, so its supremum sits at x = 1.
  c.q_inf = std::max(max_row, death_rate_);
  c.dstar_q_1 = max_offdiag;  // the kernel is symmetric: row and column sums agree
  c.dstar_q_inf = max_offdiag;
  c.d_q_1 = max_full;
  c.gamma_n = 0.0;
  c.big_gamma_n = 0.0;
  return c;
}

// ----------------------------------------------------------- IsingKac2DModel

namespace {

double grid_spacing(std::size_t side) {
  return side > 1 ? 2.0 / static_cast<double>(side - 1) : 0.0;
}

KernelSpec ising_kernel(std::size_t side, double beta, double a, bool periodic) {
  if (side == 0) throw ConfigError("ising-kac-2d: side must be positive");
  if (!std::isfinite(beta)) throw ConfigError("ising-kac-2d: beta must be finite");
  if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("ising-kac-2d: a must be nonnegative");
  const double n = static_cast<double>(side * side);
  const double h = grid_spacing(side);
  return KernelSpec::gaussian(LatticeShape{side, side}, periodic, beta / n, a * h * h);
}

}  // namespace

IsingKac2DModel::IsingKac2DModel(std::size_t side, double beta, double a, bool periodic,
                                 SumMethod method)
    : side_(side),
      beta_(beta),
      a_(a),
      periodic_(periodic),
      potential_(ising_kernel(side, beta, a, periodic), method) {}

double IsingKac2DModel::spacing() const noexcept { return grid_spacing(side_); }

void IsingKac2DModel::potentials(std::span<const double> x, std::span<double> v) const {
  require_length(x.size(), "state");
  std::vector<double> spins(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) spins[j] = 2.0 * x[j] - 1.0;
  potential_.apply(spins, v);
}

void IsingKac2DModel::shift_potentials(std::span<double> v, std::size_t j, double dx) const {
  potential_.add_column(v, j, 2.0 * dx);
}

double IsingKac2DModel::rate_up(std::size_t, double v_i) const {
  return 0.5 * (1.0 + std::tanh(v_i));
}

double IsingKac2DModel::rate_down(std::size_t, double v_i) const {
  return 0.5 * (1.0 - std::tanh(v_i));
}

void IsingKac2DModel::rates_from_potentials(std::span<const double> v, std::span<double> up,
                                            std::span<double> down) const {
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double t = std::tanh(v[i]);
    up[i] = 0.5 * (1.0 + t);
    down[i] = 0.5 * (1.0 - t);
  }
}

void IsingKac2DModel::jacobian_apply(std::span<const double> x, std::span<const double> w,
                                     std::span<double> out, bool off_diagonal) const {
  require_length(x.size(), "state");
  require_length(w.size(), "weights");
  // drift_i = (1 + tanh h_i) / 2 - x_i, so
  // d_j drift_i = (beta/n) K_ij sech^2(h_i) - [i == j].
  const std::size_t n = size();
  std::vector<double> h(n);
  potentials(x, h);
  potential_.apply(w, out);
  const double s0 = off_diagonal ? potential_.diagonal() : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = std::tanh(h[i]);
    out[i] = (1.0 - t * t) * (out[i] - s0 * w[i]) - (off_diagonal ? 0.0 : w[i]);
  }
}

NormConstants IsingKac2DModel::norm_constants() const {
  const std::vector<double> rows = potential_.row_sums();
  const std::vector<double> squares = potential_.row_square_sums();
  const double s0 = potential_.diagonal();
  const std::size_t n = size();

  NormConstants c;
  c.upper_bound = true;
  double max_offdiag = 0.0;
  double sum_sq_offdiag = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double offdiag = nonneg(rows[i] - s0);
    const double sq = nonneg(squares[i] - s0 * s0);
    max_offdiag = std::max(max_offdiag, offdiag);
    // q^+ increases with x; its sup is at x = 1 where h_i equals the row sum.
    c.q_inf = std::max(c.q_inf, 0.5 * (1.0 + std::tanh(std::abs(rows[i]))));
    c.dstar_q_21 += std::sqrt(sq);
    sum_sq_offdiag += sq;
  }
  // |d_j q_i| <= (beta/n) K_ij since sech^2 <= 1; d_i drift_i lies in [-1, s0 - 1].
  c.dstar_q_1 = max_offdiag;
  c.dstar_q_inf = max_offdiag;
  c.d_q_1 = max_offdiag + std::max(1.0, std::abs(s0 - 1.0));
  // d_j d_k q_i = 2 (beta/n)^2 K_ij K_ik tanh''(h_i).
  c.gamma_n = 2.0 * kTanhSecondDerivativeBound * sum_sq_offdiag;
  c.big_gamma_n = 2.0 * kTanhSecondDerivativeBound * max_offdiag * max_offdiag;
  return c;
}

// -------------------------------------------------------------- LinkFunction

LinkFunction::Kind LinkFunction::parse_kind(const std::string& name) {
  if (name == "constant") return Kind::constant;
  if (name == "linear-with-floor") return Kind::linear_with_floor;
  if (name == "tanh-ising") return Kind::tanh_ising;
  throw ConfigError("unsupported link function: \"" + name + "\"");
}

std::string LinkFunction::kind_name(Kind kind) {
  switch (kind) {
    case Kind::constant:
      return "constant";
    case Kind::linear_with_floor:
      return "linear-with-floor";
    case Kind::tanh_ising:
      return "tanh-ising";
  }
  return "unknown";
}

double LinkFunction::operator()(double v) const noexcept {
  switch (kind) {
    case Kind::constant:
      return value;
    case Kind::linear_with_floor:
      return std::max(floor, offset + scale * v);
    case Kind::tanh_ising:
      return 0.5 * (1.0 + sign * std::tanh(scale * v + offset));
  }
  return 0.0;
}

double LinkFunction::derivative(double v) const noexcept {
  switch (kind) {
    case Kind::constant:
      return 0.0;
    case Kind::linear_with_floor:
      return offset + scale * v > floor ? scale : 0.0;
    case Kind::tanh_ising: {
      const double t = std::tanh(scale * v + offset);
      return 0.5 * sign * scale * (1.0 - t * t);
    }
  }
  return 0.0;
}

double LinkFunction::derivative_bound() const noexcept {
  switch (kind) {
    case Kind::constant:
      return 0.0;
    case Kind::linear_with_floor:
      return std::abs(scale);
    case Kind::tanh_ising:
      return 0.5 * std::abs(scale);
  }
  return 0.0;
}

double LinkFunction::second_derivative_bound() const noexcept {
  return kind == Kind::tanh_ising ? 0.5 * scale * scale * kTanhSecondDerivativeBound : 0.0;
}

double LinkFunction::sup_on(double lo, double hi) const noexcept {
  return std::max((*this)(lo), (*this)(hi));
}

void LinkFunction::validate() const {
  const bool finite = std::isfinite(value) && std::isfinite(scale) && std::isfinite(offset) &&
                      std::isfinite(floor);
  if (!finite) throw ConfigError("link function parameters must be finite");
  if (kind == Kind::constant && value < 0.0) {
    throw ConfigError("constant link: value must be nonnegative");
  }
  if (kind == Kind::linear_with_floor && floor < 0.0) {
    throw ConfigError("linear-with-floor link: floor must be nonnegative");
  }
  if (kind == Kind::tanh_ising && sign != 1.0 && sign != -1.0) {
    throw ConfigError("tanh-ising link: sign must be +1 or -1");
  }
}

// ---------------------------------------------------------------- DenseModel

DenseModel::DenseModel(DenseMatrix weights, LinkFunction up, LinkFunction down)
    : weights_(std::move(weights)), up_(up), down_(down) {
  if (weights_.rows == 0 || weights_.rows != weights_.cols) {
    throw ConfigError("dense: weight matrix must be square and nonempty");
  }
  if (std::any_of(weights_.values.begin(), weights_.values.end(),
                  [](double s) { return !std::isfinite(s); })) {
    throw ConfigError("dense: weights must be finite");
  }
  up_.validate();
  down_.validate();
}

void DenseModel::potentials(std::span<const double> x, std::span<double> v) const {
  require_length(x.size(), "state");
  const std::vector<double> out = sum_dense(weights_, x);
  std::copy(out.begin(), out.end(), v.begin());
}

void DenseModel::shift_potentials(std::span<double> v, std::size_t j, double dx) const {
  for (std::size_t i = 0; i < weights_.rows; ++i) v[i] += weights_(i, j) * dx;
}

void DenseModel::jacobian_apply(std::span<const double> x, std::span<const double> w,
                                std::span<double> out, bool off_diagonal) const {
  require_length(x.size(), "state");
  require_length(w.size(), "weights");
  const std::size_t n = size();
  std::vector<double> v(n);
  potentials(x, v);
  std::vector<double> sw(n);
  potentials(w, sw);
  // d_j drift_i = g_i s_ij - [i == j] (f^+(v_i) + f^-(v_i)),
  // g_i = (1 - x_i) f^+'(v_i) - x_i f^-'(v_i).
  for (std::size_t i = 0; i < n; ++i) {
    const double g = (1.0 - x[i]) * up_.derivative(v[i]) - x[i] * down_.derivative(v[i]);
    if (off_diagonal) {
      out[i] = g * (sw[i] - weights_(i, i) * w[i]);
    } else {
      out[i] = g * sw[i] - (up_(v[i]) + down_(v[i])) * w[i];
    }
  }
}

NormConstants DenseModel::norm_constants() const {
  const std::size_t n = size();
  const double d1 = std::max(up_.derivative_bound(), down_.derivative_bound());
  const double d2 = std::max(up_.second_derivative_bound(), down_.second_derivative_bound());

  NormConstants c;
  c.upper_bound = true;
  std::vector<double> col_offdiag(n, 0.0);
  double max_row_offdiag = 0.0;
  double sum_sq_offdiag = 0.0;
  std::vector<double> rate_sum_sup(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double lo = 0.0;
    double hi = 0.0;
    double row_offdiag = 0.0;
    double row_sq = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double s = weights_(i, j);
      (s > 0.0 ? hi : lo) += s;
      if (j != i) {
        row_offdiag += std::abs(s);
        row_sq += s * s;
        col_offdiag[j] += std::abs(s);
      }
    }
    const double up_sup = up_.sup_on(lo, hi);
    const double down_sup = down_.sup_on(lo, hi);
    c.q_inf = std::max({c.q_inf, up_sup, down_sup});
    rate_sum_sup[i] = up_sup + down_sup;
    max_row_offdiag = std::max(max_row_offdiag, row_offdiag);
    c.dstar_q_21 += d1 * std::sqrt(row_sq);
    sum_sq_offdiag += row_sq;
    c.big_gamma_n = std::max(c.big_gamma_n, d2 * row_offdiag * row_offdiag);
  }
  for (std::size_t j = 0; j < n; ++j) {
    c.dstar_q_1 = std::max(c.dstar_q_1, d1 * col_offdiag[j]);
    const double diag = d1 * std::abs(weights_(j, j)) + rate_sum_sup[j];
    c.d_q_1 = std::max(c.d_q_1, d1 * col_offdiag[j] + diag);
  }
  c.dstar_q_inf = d1 * max_row_offdiag;
  c.gamma_n = d2 * sum_sq_offdiag;
  return c;
}

// ------------------------------------------------------ IndependentSitesModel

IndependentSitesModel::IndependentSitesModel(std::vector<double> up, std::vector<double> down)
    : up_(std::move(up)), down_(std::move(down)) {
  if (up_.empty() || up_.size() != down_.size()) {
    throw ConfigError("independent: rate vectors must be nonempty and of equal length");
  }
  auto bad = [](double r) { return !(r >= 0.0) || !std::isfinite(r); };
  if (std::any_of(up_.begin(), up_.end(), bad) || std::any_of(down_.begin(), down_.end(), bad)) {
    throw ConfigError("independent: rates must be finite and nonnegative");
  }
}

void IndependentSitesModel::potentials(std::span<const double> x, std::span<double> v) const {
  require_length(x.size(), "state");
  std::fill(v.begin(), v.end(), 0.0);
}

void IndependentSitesModel::jacobian_apply(std::span<const double> x,
                                           std::span<const double> w, std::span<double> out,
                                           bool off_diagonal) const {
  require_length(x.size(), "state");
  for (std::size_t i = 0; i < size(); ++i) {
    out[i] = off_diagonal ? 0.0 : -(up_[i] + down_[i]) * w[i];
  }
}

NormConstants IndependentSitesModel::norm_constants() const {
  NormConstants c;
  c.q_inf = std::max(max_of(up_), max_of(down_));
  for (std::size_t i = 0; i < size(); ++i) c.d_q_1 = std::max(c.d_q_1, up_[i] + down_[i]);
  return c;
}

}  // namespace spinsim
