#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "doctest.h"
#include "spinsim/errors.hpp"
#include "spinsim/models.hpp"
#include "support/oracles.hpp"

using namespace spinsim;

namespace {

std::vector<double> interior_point(std::size_t n, oracle::TestRng& rng) {
  std::vector<double> x(n);
  for (double& v : x) v = rng.uniform(0.05, 0.95);
  return x;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// A central difference of drift along w gives J w; differences of drift_i in
// x_i give the diagonal entry removed by the off-diagonal variant.
void check_jacobian(const RateModel& model, std::uint64_t seed) {
  const std::size_t n = model.size();
  oracle::TestRng rng(seed);
  const double h = 1e-5;
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<double> x = interior_point(n, rng);
    std::vector<double> w(n);
    for (double& v : w) v = rng.uniform(-1.0, 1.0);
    const std::vector<double> full = model.jacobian_apply(x, w, false);
    const std::vector<double> off = model.jacobian_apply(x, w, true);
    std::vector<double> xp = x, xm = x;
    for (std::size_t j = 0; j < n; ++j) {
      xp[j] += h * w[j];
      xm[j] -= h * w[j];
    }
    const std::vector<double> dp = model.drift(xp), dm = model.drift(xm);
    std::vector<double> fd_full(n), fd_off(n);
    for (std::size_t i = 0; i < n; ++i) {
      fd_full[i] = (dp[i] - dm[i]) / (2.0 * h);
      std::vector<double> yp = x, ym = x;
      yp[i] += h;
      ym[i] -= h;
      const double diag = (model.drift(yp)[i] - model.drift(ym)[i]) / (2.0 * h);
      fd_off[i] = fd_full[i] - diag * w[i];
    }
    double scale = 0.0, err_full = 0.0, err_off = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      scale = std::max({scale, std::fabs(fd_full[i]), std::fabs(fd_off[i])});
      err_full = std::max(err_full, std::fabs(full[i] - fd_full[i]));
      err_off = std::max(err_off, std::fabs(off[i] - fd_off[i]));
    }
    CHECK(err_full <= 1e-5 * scale);
    CHECK(err_off <= 1e-5 * scale);
  }
}

// Suprema over the vertices of [0,1]^n of the rates and of the first
// derivatives of the drift (central differences, step 1e-6).
struct VertexSups {
  double rate = 0.0;
  std::vector<std::vector<double>> d;  // d[i][j] = sup |d_j drift_i|
};

VertexSups vertex_sups(const RateModel& model) {
  const std::size_t n = model.size();
  VertexSups s;
  s.d.assign(n, std::vector<double>(n, 0.0));
  const double h = 1e-6;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = (mask >> i) & 1U;
    const std::vector<double> up = model.rates_up(x), down = model.rates_down(x);
    for (std::size_t i = 0; i < n; ++i) s.rate = std::max({s.rate, up[i], down[i]});
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const std::vector<double> dp = model.drift(xp), dm = model.drift(xm);
      for (std::size_t i = 0; i < n; ++i) {
        s.d[i][j] = std::max(s.d[i][j], std::fabs(dp[i] - dm[i]) / (2.0 * h));
      }
    }
  }
  return s;
}

NormConstants norms_from_sups(const VertexSups& s) {
  const std::size_t n = s.d.size();
  NormConstants c;
  c.q_inf = s.rate;
  for (std::size_t j = 0; j < n; ++j) {
    double col_off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (i != j) col_off += s.d[i][j];
    c.dstar_q_1 = std::max(c.dstar_q_1, col_off);
    c.d_q_1 = std::max(c.d_q_1, col_off + s.d[j][j]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double row_off = 0.0, row_sq = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      row_off += s.d[i][j];
      row_sq += s.d[i][j] * s.d[i][j];
    }
    c.dstar_q_inf = std::max(c.dstar_q_inf, row_off);
    c.dstar_q_21 += std::sqrt(row_sq);
  }
  return c;
}

void check_dominates(const NormConstants& reported, const NormConstants& sampled) {
  const double slack = 1e-6;
  CHECK(reported.q_inf >= sampled.q_inf - slack);
  CHECK(reported.dstar_q_1 >= sampled.dstar_q_1 - slack);
  CHECK(reported.d_q_1 >= sampled.d_q_1 - slack);
  CHECK(reported.dstar_q_inf >= sampled.dstar_q_inf - slack);
  CHECK(reported.dstar_q_21 >= sampled.dstar_q_21 - slack);
}

void check_nonnegative(const NormConstants& c) {
  for (double v : {c.q_inf, c.dstar_q_1, c.d_q_1, c.dstar_q_inf, c.dstar_q_21, c.gamma_n,
                   c.big_gamma_n}) {
    CHECK(v >= 0.0);
  }
  CHECK(c.dstar_q_1 <= c.d_q_1);
}

DenseModel tanh_dense_model(std::size_t n, std::uint64_t seed) {
  oracle::TestRng rng(seed);
  DenseMatrix w(n, n);
  for (double& v : w.values) v = rng.uniform(-1.0, 1.0);
  LinkFunction up{LinkFunction::Kind::tanh_ising, 0.0, 1.5, 0.1, 0.0, 1.0};
  LinkFunction down{LinkFunction::Kind::tanh_ising, 0.0, 1.5, 0.1, 0.0, -1.0};
  return DenseModel(std::move(w), up, down);
}

}  // namespace

TEST_SUITE("models") {
  TEST_CASE("zero state gives zero potentials") {
    const GaussConv1DModel g(100, 5.0);
    for (double v : g.potentials(std::vector<double>(100, 0.0))) CHECK(std::fabs(v) < 1e-15);
  }

  TEST_CASE("Gauss model: interior up rate at x = 1 is two") {
    const GaussConv1DModel g(2000, 20.0, 1.0);
    const std::vector<double> up = g.rates_up(std::vector<double>(2000, 1.0));
    for (std::size_t i = 900; i < 1100; ++i) CHECK(up[i] == doctest::Approx(2.0).epsilon(1e-9));
  }

  TEST_CASE("Gauss model potentials match the defining double sum") {
    for (bool periodic : {false, true}) {
      const std::size_t n = 300;
      oracle::TestRng rng(4);
      std::vector<double> x(n);
      for (double& v : x) v = rng.uniform() < 0.3 ? 1.0 : 0.0;
      const GaussConv1DModel fft(n, 20.0, 1.0, periodic, SumMethod::fft);
      const GaussConv1DModel direct(n, 20.0, 1.0, periodic, SumMethod::direct);
      const std::vector<double> want = oracle::gauss_1d_dense(x, 20.0, periodic);
      const std::vector<double> a = fft.potentials(x), b = direct.potentials(x);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(std::fabs(a[i] - want[i]) < 1e-10);
        CHECK(std::fabs(b[i] - want[i]) < 1e-12);
      }
    }
  }

  TEST_CASE("dense model potentials on 8 sites match a brute-force loop") {
    oracle::TestRng rng(5);
    DenseMatrix w(8, 8);
    for (double& v : w.values) v = rng.uniform(-2.0, 2.0);
    std::vector<double> x(8);
    for (double& v : x) v = rng.uniform() < 0.5 ? 1.0 : 0.0;
    const DenseModel m(w, LinkFunction{LinkFunction::Kind::constant, 1.0},
                       LinkFunction{LinkFunction::Kind::constant, 1.0});
    const std::vector<double> v = m.potentials(x);
    for (std::size_t i = 0; i < 8; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < 8; ++j) acc += w(i, j) * x[j];
      CHECK(std::fabs(v[i] - acc) < 1e-12);
    }
  }

  TEST_CASE("Ising potentials follow the [-1,1]^2 embedding") {
    const std::size_t m = 5;
    const double beta = 1.3, a = 0.7;
    const IsingKac2DModel model(m, beta, a);
    oracle::TestRng rng(6);
    std::vector<double> x(m * m);
    for (double& v : x) v = rng.uniform();
    const std::vector<double> h = model.potentials(x);
    const double n = static_cast<double>(m * m);
    auto z = [&](std::size_t k) { return 2.0 * static_cast<double>(k) / (m - 1) - 1.0; };
    for (std::size_t i = 0; i < m * m; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < m * m; ++j) {
        const double dr = z(i / m) - z(j / m), dc = z(i % m) - z(j % m);
        acc += std::exp(-a * (dr * dr + dc * dc)) * (2.0 * x[j] - 1.0);
      }
      CHECK(std::fabs(h[i] - beta / n * acc) < 1e-12);
    }
  }

  TEST_CASE("Ising rates sum to one and lie in [0,1]") {
    const IsingKac2DModel model(16, 2.0, 40.0 / 256.0);
    oracle::TestRng rng(7);
    const std::vector<double> x = interior_point(256, rng);
    const auto up = model.rates_up(x), down = model.rates_down(x);
    for (std::size_t i = 0; i < 256; ++i) {
      CHECK(up[i] + down[i] == doctest::Approx(1.0).epsilon(1e-15));
      CHECK(up[i] >= 0.0);
      CHECK(up[i] <= 1.0);
    }
    CHECK(model.norm_constants().q_inf <= 1.0);
  }

  TEST_CASE("rates are nonnegative on random points for every model") {
    oracle::TestRng rng(8);
    const GaussConv1DModel g(64, 8.0);
    const IsingKac2DModel is(8, -3.0, 0.5);
    const DenseModel d = tanh_dense_model(16, 9);
    for (const RateModel* m : std::initializer_list<const RateModel*>{&g, &is, &d}) {
      for (int k = 0; k < 20; ++k) {
        const std::vector<double> x = interior_point(m->size(), rng);
        for (double r : m->rates_up(x)) CHECK(r >= 0.0);
        for (double r : m->rates_down(x)) CHECK(r >= 0.0);
      }
    }
  }

  TEST_CASE("drift agrees with the rate combination") {
    oracle::TestRng rng(10);
    const IsingKac2DModel model(6, 1.0, 0.3);
    const std::vector<double> x = interior_point(36, rng);
    const auto up = model.rates_up(x), down = model.rates_down(x), dr = model.drift(x);
    for (std::size_t i = 0; i < 36; ++i) {
      CHECK(dr[i] == doctest::Approx((1.0 - x[i]) * up[i] - x[i] * down[i]).epsilon(1e-14));
    }
  }

  TEST_CASE("Gauss up rates are linear in the state") {
    oracle::TestRng rng(11);
    const GaussConv1DModel g(128, 10.0);
    const std::vector<double> x = interior_point(128, rng), y = interior_point(128, rng);
    std::vector<double> mix(128);
    for (std::size_t i = 0; i < 128; ++i) mix[i] = 0.3 * x[i] + 0.7 * y[i];
    const auto ux = g.rates_up(x), uy = g.rates_up(y), um = g.rates_up(mix);
    for (std::size_t i = 0; i < 128; ++i) CHECK(std::fabs(um[i] - (0.3 * ux[i] + 0.7 * uy[i])) < 1e-12);
  }

  TEST_CASE("Jacobian-transpose products match central differences") {
    SUBCASE("gauss") { check_jacobian(GaussConv1DModel(64, 12.0, 1.0), 12); }
    SUBCASE("gauss periodic") { check_jacobian(GaussConv1DModel(50, 7.0, 0.5, true), 13); }
    SUBCASE("ising") { check_jacobian(IsingKac2DModel(8, 2.0, 0.8), 14); }
    SUBCASE("ising periodic") { check_jacobian(IsingKac2DModel(7, 1.0, 0.4, true), 15); }
    SUBCASE("dense tanh") { check_jacobian(tanh_dense_model(16, 16), 17); }
    SUBCASE("dense linear") {
      oracle::TestRng rng(18);
      DenseMatrix w(12, 12);
      for (double& v : w.values) v = rng.uniform(0.0, 1.0);
      const DenseModel m(w, LinkFunction{LinkFunction::Kind::linear_with_floor, 0.0, 0.8, 0.2, 0.0},
                         LinkFunction{LinkFunction::Kind::constant, 0.7});
      check_jacobian(m, 19);
    }
    SUBCASE("independent") {
      check_jacobian(IndependentSitesModel({1.0, 2.0, 0.5}, {0.3, 0.0, 4.0}), 20);
    }
  }

  TEST_CASE("incremental potential shifts equal a full recomputation") {
    const GaussConv1DModel g(40, 6.0);
    const IsingKac2DModel is(5, 1.0, 0.5);
    const DenseModel d = tanh_dense_model(10, 21);
    for (const RateModel* m : std::initializer_list<const RateModel*>{&g, &is, &d}) {
      std::vector<double> x(m->size(), 0.0);
      x[1] = 1.0;
      std::vector<double> v = m->potentials(x);
      m->shift_potentials(v, 3, 1.0);
      m->shift_potentials(v, 1, -1.0);
      x[3] = 1.0;
      x[1] = 0.0;
      const std::vector<double> want = m->potentials(x);
      for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::fabs(v[i] - want[i]) < 1e-12);
    }
  }

  TEST_CASE("rate function selects the active direction") {
    const GaussConv1DModel g(50, 5.0, 1.0);
    SpinState ones(std::vector<std::uint8_t>(50, 1));
    for (std::size_t i = 0; i < 50; ++i) CHECK(rate_function(g, ones, i) == 1.0);

    SpinState mixed(50);
    mixed.set(10, true);
    const std::vector<double> x = mixed.to_real();
    const auto up = g.rates_up(x), down = g.rates_down(x);
    CHECK(rate_function(g, mixed, 10) == down[10]);
    CHECK(rate_function(g, mixed, 11) == up[11]);
    CHECK_THROWS_AS(rate_function(g, SpinState(49), 0), ConfigError);
  }

  TEST_CASE("zero-rate models have vanishing norm constants") {
    const IndependentSitesModel ind({0.0, 0.0, 0.0}, {0.0, 0.0, 0.0});
    const DenseModel dense(DenseMatrix(4, 4, 0.5), LinkFunction{LinkFunction::Kind::constant, 0.0},
                           LinkFunction{LinkFunction::Kind::constant, 0.0});
    for (const NormConstants& c : {ind.norm_constants(), dense.norm_constants()}) {
      CHECK(c.q_inf == 0.0);
      CHECK(c.dstar_q_1 == 0.0);
      CHECK(c.d_q_1 == 0.0);
      CHECK(c.dstar_q_inf == 0.0);
      CHECK(c.dstar_q_21 == 0.0);
      CHECK(c.gamma_n == 0.0);
      CHECK(c.big_gamma_n == 0.0);
    }
  }

  TEST_CASE("Gauss norm constants: worked example") {
    const std::size_t n = 2000;
    const double sigma = 20.0;
    const GaussConv1DModel g(n, sigma, 1.0);
    const NormConstants c = g.norm_constants();
    CHECK(c.q_inf == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(c.gamma_n == 0.0);
    CHECK(c.big_gamma_n == 0.0);
    CHECK_FALSE(c.upper_bound);
    const double k = 2.0 * sigma / (n * std::sqrt(M_PI));
    double best = 0.0;
    for (std::size_t j = 0; j < n; j += 1) {
      double col = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (i == j) continue;
        const double r = sigma * (static_cast<double>(i) - static_cast<double>(j)) / n;
        col += k * std::exp(-r * r);
      }
      best = std::max(best, col);
    }
    CHECK(c.dstar_q_1 == doctest::Approx(best).epsilon(1e-10));
    check_nonnegative(c);
  }

  TEST_CASE("Gauss norm constants equal vertex suprema on a small instance") {
    const GaussConv1DModel g(8, 3.0, 0.7);
    const NormConstants c = g.norm_constants();
    const NormConstants s = norms_from_sups(vertex_sups(g));
    CHECK(c.q_inf == doctest::Approx(s.q_inf).epsilon(1e-9));
    CHECK(c.dstar_q_1 == doctest::Approx(s.dstar_q_1).epsilon(1e-6));
    CHECK(c.d_q_1 == doctest::Approx(s.d_q_1).epsilon(1e-6));
    CHECK(c.dstar_q_inf == doctest::Approx(s.dstar_q_inf).epsilon(1e-6));
    CHECK(c.dstar_q_21 == doctest::Approx(s.dstar_q_21).epsilon(1e-6));
  }

  TEST_CASE("Ising and dense norm constants bound the vertex suprema") {
    const IsingKac2DModel is(3, 3.0, 0.2);
    const NormConstants ci = is.norm_constants();
    CHECK(ci.upper_bound);
    check_dominates(ci, norms_from_sups(vertex_sups(is)));
    check_nonnegative(ci);

    const DenseModel d = tanh_dense_model(7, 22);
    const NormConstants cd = d.norm_constants();
    CHECK(cd.upper_bound);
    check_dominates(cd, norms_from_sups(vertex_sups(d)));
    check_nonnegative(cd);
  }

  TEST_CASE("invalid construction is a configuration error") {
    CHECK_THROWS_AS(GaussConv1DModel(0, 1.0), ConfigError);
    CHECK_THROWS_AS(GaussConv1DModel(10, -1.0), ConfigError);
    CHECK_THROWS_AS(GaussConv1DModel(10, 1.0, -0.5), ConfigError);
    CHECK_THROWS_AS(IsingKac2DModel(0, 1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(IsingKac2DModel(4, 1.0, -1.0), ConfigError);
    CHECK_THROWS_AS(LinkFunction::parse_kind("cubic"), ConfigError);
    CHECK_THROWS_AS(DenseModel(DenseMatrix(2, 3), LinkFunction{}, LinkFunction{}), ConfigError);
    CHECK_THROWS_AS(IndependentSitesModel({1.0}, {1.0, 2.0}), ConfigError);
    const GaussConv1DModel g(10, 1.0);
    CHECK_THROWS_AS(g.potentials(std::vector<double>(9, 0.0)), ConfigError);
  }

  TEST_CASE("lattice metadata") {
    CHECK(GaussConv1DModel(10, 1.0).lattice()->cols == 10);
    const IsingKac2DModel is(6, 1.0, 0.1);
    CHECK(is.lattice()->rows == 6);
    CHECK(is.spacing() == doctest::Approx(0.4));
    CHECK(is.size() == 36);
  }
}
