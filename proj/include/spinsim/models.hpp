#pragma once

#include <memory>
#include <string>

#include "spinsim/fast_sum.hpp"
#include "spinsim/rate_model.hpp"

namespace spinsim {

/// How lattice models evaluate their potentials.
enum class SumMethod { fft, direct };

/// Translation-invariant potential on a lattice with cached FFT machinery.
class LatticePotential {
 public:
  LatticePotential(KernelSpec kernel, SumMethod method);

  const KernelSpec& kernel() const noexcept { return conv_.kernel(); }
  SumMethod method() const noexcept { return method_; }

  void apply(std::span<const double> x, std::span<double> out) const;
  /// v_i += normalization * k(i - j) * scale for every site i.
  void add_column(std::span<double> v, std::size_t j, double scale) const;

  double diagonal() const noexcept;
  /// sum_j s_ij for every row i.
  std::vector<double> row_sums() const;
  /// sum_j s_ij^2 for every row i.
  std::vector<double> row_square_sums() const;

 private:
  FftConvolver conv_;
  SumMethod method_;
};

/// One-dimensional Gaussian convolution model:
///   q_i^+(x) = (2 sigma / (n sqrt(pi))) sum_j exp(-(sigma (i - j) / n)^2) x_j,
///   q_i^-(x) = death_rate.
/// Rates are linear in x, so the second-order constants vanish.
class GaussConv1DModel final : public RateModel {
 public:
  GaussConv1DModel(std::size_t n, double sigma, double death_rate = 1.0, bool periodic = false,
                   SumMethod method = SumMethod::fft);

  using RateModel::jacobian_apply;
  using RateModel::potentials;

  std::string name() const override { return "gauss-conv-1d"; }
  std::size_t size() const override { return n_; }
  std::optional<LatticeShape> lattice() const override { return LatticeShape{1, n_}; }

  void potentials(std::span<const double> x, std::span<double> v) const override;
  void shift_potentials(std::span<double> v, std::size_t j, double dx) const override;
  double rate_up(std::size_t, double v_i) const override { return v_i > 0.0 ? v_i : 0.0; }
  double rate_down(std::size_t, double) const override { return death_rate_; }
  void rates_from_potentials(std::span<const double> v, std::span<double> up,
                             std::span<double> down) const override;
  void jacobian_apply(std::span<const double> x, std::span<const double> w,
                      std::span<double> out, bool off_diagonal) const override;
  NormConstants norm_constants() const override;

  double sigma() const noexcept { return sigma_; }
  double death_rate() const noexcept { return death_rate_; }
  bool periodic() const noexcept { return periodic_; }
  const LatticePotential& potential() const noexcept { return potential_; }

 private:
  std::size_t n_;
  double sigma_;
  double death_rate_;
  bool periodic_;
  LatticePotential potential_;
};

/// Ising model with Gaussian Kac potentials on an m x m grid mapped into
/// [-1,1]^2:
///   q_i^{+/-}(x) = (1 +/- tanh(h_i)) / 2,
///   h_i = (beta / n) sum_j exp(-a |z_i - z_j|^2) (2 x_j - 1).
/// The stored potential is h itself.
class IsingKac2DModel final : public RateModel {
 public:
  IsingKac2DModel(std::size_t side, double beta, double a, bool periodic = false,
                  SumMethod method = SumMethod::fft);

  using RateModel::jacobian_apply;
  using RateModel::potentials;

  std::string name() const override { return "ising-kac-2d"; }
  std::size_t size() const override { return side_ * side_; }
  std::optional<LatticeShape> lattice() const override { return LatticeShape{side_, side_}; }

  void potentials(std::span<const double> x, std::span<double> v) const override;
  void shift_potentials(std::span<double> v, std::size_t j, double dx) const override;
  double rate_up(std::size_t, double v_i) const override;
  double rate_down(std::size_t, double v_i) const override;
  void rates_from_potentials(std::span<const double> v, std::span<double> up,
                             std::span<double> down) const override;
  void jacobian_apply(std::span<const double> x, std::span<const double> w,
                      std::span<double> out, bool off_diagonal) const override;
  NormConstants norm_constants() const override;

  std::size_t side() const noexcept { return side_; }
  double beta() const noexcept { return beta_; }
  double a() const noexcept { return a_; }
  bool periodic() const noexcept { return periodic_; }
  /// Grid spacing of the [-1,1]^2 embedding.
  double spacing() const noexcept;

 private:
  std::size_t side_;
  double beta_;
  double a_;
  bool periodic_;
  LatticePotential potential_;
};

/// Scalar link f mapping a potential to a nonnegative rate.
struct LinkFunction {
  enum class Kind { constant, linear_with_floor, tanh_ising };

  Kind kind = Kind::constant;
  /// constant: f(v) = value.
  double value = 0.0;
  /// linear-with-floor: f(v) = max(floor, offset + scale v).
  /// tanh-ising: f(v) = (1 + sign tanh(scale v + offset)) / 2.
  double scale = 1.0;
  double offset = 0.0;
  double floor = 0.0;
  double sign = 1.0;

  /// Recognised names: "constant", "linear-with-floor", "tanh-ising".
  static Kind parse_kind(const std::string& name);
  static std::string kind_name(Kind kind);

  double operator()(double v) const noexcept;
  double derivative(double v) const noexcept;
  /// sup |f'| and sup |f''| over the real line.
  double derivative_bound() const noexcept;
  double second_derivative_bound() const noexcept;
  /// sup of f over [lo, hi]; every supported link is monotone.
  double sup_on(double lo, double hi) const noexcept;

  void validate() const;
};

/// Rates from an explicit n x n weight matrix and per-direction links.
/// Norm constants are analytic upper bounds (see norm_constants()).
class DenseModel final : public RateModel {
 public:
  DenseModel(DenseMatrix weights, LinkFunction up, LinkFunction down);

  using RateModel::jacobian_apply;
  using RateModel::potentials;

  std::string name() const override { return "dense"; }
  std::size_t size() const override { return weights_.rows; }

  void potentials(std::span<const double> x, std::span<double> v) const override;
  void shift_potentials(std::span<double> v, std::size_t j, double dx) const override;
  double rate_up(std::size_t, double v_i) const override { return up_(v_i); }
  double rate_down(std::size_t, double v_i) const override { return down_(v_i); }
  void jacobian_apply(std::span<const double> x, std::span<const double> w,
                      std::span<double> out, bool off_diagonal) const override;
  /// Upper bounds: sup over [0,1]^n of each rate is taken at the two corners
  /// extremising v_i (every link is monotone); derivative terms use the
  /// global bounds of f' and f'' times |s_ij|.
  NormConstants norm_constants() const override;

  const DenseMatrix& weights() const noexcept { return weights_; }
  const LinkFunction& link_up() const noexcept { return up_; }
  const LinkFunction& link_down() const noexcept { return down_; }

 private:
  DenseMatrix weights_;
  LinkFunction up_;
  LinkFunction down_;
};

/// Rates that do not depend on the state: q_i^+ = up[i], q_i^- = down[i].
class IndependentSitesModel final : public RateModel {
 public:
  IndependentSitesModel(std::vector<double> up, std::vector<double> down);

  using RateModel::jacobian_apply;
  using RateModel::potentials;

  std::string name() const override { return "independent"; }
  std::size_t size() const override { return up_.size(); }
  void potentials(std::span<const double> x, std::span<double> v) const override;
  void shift_potentials(std::span<double>, std::size_t, double) const override {}
  double rate_up(std::size_t i, double) const override { return up_[i]; }
  double rate_down(std::size_t i, double) const override { return down_[i]; }
  void jacobian_apply(std::span<const double> x, std::span<const double> w,
                      std::span<double> out, bool off_diagonal) const override;
  NormConstants norm_constants() const override;

 private:
  std::vector<double> up_;
  std::vector<double> down_;
};

}  // namespace spinsim
