#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "spinsim/bounds.hpp"
#include "spinsim/deterministic.hpp"
#include "spinsim/errors.hpp"
#include "spinsim/models.hpp"
#include "support/oracles.hpp"

using namespace spinsim;

namespace {

// One site with q+ = 2 rho, q- = 1: d rho/dt = rho (1 - 2 rho).
DenseModel logistic_model() {
  return DenseModel(DenseMatrix(1, 1, 2.0),
                    LinkFunction{LinkFunction::Kind::linear_with_floor, 0.0, 1.0, 0.0, 0.0},
                    LinkFunction{LinkFunction::Kind::constant, 1.0});
}

double logistic(double rho0, double t) {
  const double e = std::exp(t);
  return 0.5 * rho0 * e / (0.5 + rho0 * (e - 1.0));
}

// Two sites with q+ = c + a v, q- = c' - a v: the drift c - (c + c') x + a S x is
// affine, so rho and E solve linear constant-coefficient systems.
struct LinearPair {
  double c = 1.0, c2 = 1.5, a = 0.5;
  DenseMatrix s{2, 2};
  LinearPair() {
    s(0, 0) = 0.4;
    s(0, 1) = 1.0;
    s(1, 0) = 0.5;
    s(1, 1) = 0.2;
  }
  DenseModel model() const {
    return DenseModel(s, LinkFunction{LinkFunction::Kind::linear_with_floor, 0.0, a, c, 0.0},
                      LinkFunction{LinkFunction::Kind::linear_with_floor, 0.0, -a, c2, 0.0});
  }
  long double A(int i, int j) const {
    return a * s(i, j) - (i == j ? c + c2 : 0.0);
  }
  // E(t) from the exponential of the block system [[A, A_off A / 2], [0, A]].
  std::array<double, 2> error_field(const std::array<double, 2>& rho0, double t) const {
    const long double det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    const long double star0 = -(A(1, 1) * c - A(0, 1) * c) / det;
    const long double star1 = -(-A(1, 0) * c + A(0, 0) * c) / det;
    oracle::MatN m(4, std::vector<long double>(4, 0.0L));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        m[i][j] = A(i, j) * t;
        m[2 + i][2 + j] = A(i, j) * t;
        long double f = 0.0L;
        for (int k = 0; k < 2; ++k) {
          if (k != i) f += A(i, k) * A(k, j);
        }
        m[i][2 + j] = 0.5L * f * t;
      }
    const oracle::MatN e = oracle::expm(m);
    const long double d0 = rho0[0] - star0, d1 = rho0[1] - star1;
    return {static_cast<double>(e[0][2] * d0 + e[0][3] * d1),
            static_cast<double>(e[1][2] * d0 + e[1][3] * d1)};
  }
};

double sup_abs(const RealState& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  return m;
}

}  // namespace

TEST_SUITE("deterministic") {
  TEST_CASE("default step") {
    CHECK(default_ode_step(1.0, 0.01) == doctest::Approx(0.0005));
    CHECK(default_ode_step(3.0, 0.0) == doctest::Approx(0.0015));
    CHECK(default_ode_step(1.0, 0.0003) == doctest::Approx(1.0 / 3334.0));
    CHECK_THROWS_AS(default_ode_step(0.0, 0.1), ConfigError);
  }

  TEST_CASE("zero rates keep rho constant and E zero") {
    const IndependentSitesModel zero({0.0, 0.0, 0.0}, {0.0, 0.0, 0.0});
    const RealState rho0{0.1, 0.5, 0.9};
    const OdeSolution s = solve_rho(zero, rho0, 2.0, 0.1);
    for (const RealState& r : s.states) CHECK(r == rho0);
    for (const RealState& e : solve_error_field(zero, rho0, 2.0, 0.1).states) CHECK(sup_abs(e) == 0.0);
  }

  TEST_CASE("logistic density tends to one half") {
    const OdeSolution s = solve_rho(logistic_model(), RealState{0.1}, 20.0, 0.01, 100);
    CHECK(s.states.back()[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(s.times.size() == 21);
    for (std::size_t k = 0; k < s.times.size(); ++k) {
      CHECK(std::fabs(s.states[k][0] - logistic(0.1, s.times[k])) < 1e-8);
    }
  }

  TEST_CASE("RK4 converges at fourth order on the logistic equation") {
    const DenseModel m = logistic_model();
    std::vector<double> errors;
    for (double h : {0.2, 0.1, 0.05, 0.025}) {
      const OdeSolution s = solve_rho(m, RealState{0.1}, 4.0, h);
      double err = 0.0;
      for (std::size_t k = 0; k < s.times.size(); ++k) {
        err = std::max(err, std::fabs(s.states[k][0] - logistic(0.1, s.times[k])));
      }
      errors.push_back(err);
    }
    for (std::size_t k = 1; k < errors.size(); ++k) {
      CHECK(std::log2(errors[k - 1] / errors[k]) >= 3.5);
    }
  }

  TEST_CASE("frozen-rate density: constant rates match the exact relaxation") {
    const IndependentSitesModel m({2.0}, {1.0});
    const OdeSolution s = solve_rho_delta(m, RealState{0.0}, 0.5, 3.0);
    const OdeSolution r = solve_rho(m, RealState{0.0}, 3.0, 0.5 / 64.0, 64);
    REQUIRE(s.times.size() == 7);
    REQUIRE(r.times.size() == 7);
    for (std::size_t k = 0; k < s.times.size(); ++k) {
      const double exact = 2.0 / 3.0 * (1.0 - std::exp(-3.0 * s.times[k]));
      CHECK(std::fabs(s.states[k][0] - exact) < 1e-14);
      CHECK(std::fabs(r.states[k][0] - exact) < 1e-9);
    }
  }

  TEST_CASE("frozen-rate density: single logistic site, piecewise exponential") {
    const double delta = 0.5;
    const OdeSolution s = solve_rho_delta(logistic_model(), RealState{0.1}, delta, 3.0);
    double y = 0.1;
    for (std::size_t k = 1; k < s.times.size(); ++k) {
      const double up = 2.0 * y, total = up + 1.0;
      y = up / total + (y - up / total) * std::exp(-total * delta);
      CHECK(std::fabs(s.states[k][0] - y) < 1e-14);
    }
  }

  TEST_CASE("frozen-rate density approaches rho at first order") {
    const GaussConv1DModel m(200, 10.0, 1.0);
    const RealState rho0(200, 0.1);
    const double t_end = 1.0;
    const OdeSolution rho = solve_rho(m, rho0, t_end, 0.001, 40);
    const NormConstants norms = m.norm_constants();
    std::vector<double> gaps;
    for (double delta : {0.04, 0.02, 0.01}) {
      const auto stride = static_cast<std::size_t>(std::lround(0.04 / delta));
      const OdeSolution rd = solve_rho_delta(m, rho0, delta, t_end, stride);
      REQUIRE(rd.times.size() == rho.times.size());
      double gap = 0.0;
      for (std::size_t k = 0; k < rd.times.size(); ++k) {
        for (std::size_t i = 0; i < 200; ++i) {
          gap = std::max(gap, std::fabs(rd.states[k][i] - rho.states[k][i]));
        }
      }
      const double bound = 4.0 * 200 * delta * t_end * norms.q_inf * norms.dstar_q_1 *
                           std::exp(2.0 * t_end * (norms.q_inf + norms.dstar_q_1));
      CHECK(gap <= bound);
      gaps.push_back(gap);
    }
    for (std::size_t k = 1; k < gaps.size(); ++k) {
      const double ratio = gaps[k - 1] / gaps[k];
      CHECK(ratio > 1.7);
      CHECK(ratio < 2.3);
    }
  }

  TEST_CASE("error field of a linear two-site system matches its closed form") {
    const LinearPair lp;
    const DenseModel m = lp.model();
    const std::array<double, 2> rho0{0.1, 0.9};
    const OdeSolution e = solve_error_field(m, RealState{rho0[0], rho0[1]}, 2.0, 0.01, 50);
    for (std::size_t k = 0; k < e.times.size(); ++k) {
      const auto want = lp.error_field(rho0, e.times[k]);
      CHECK(std::fabs(e.states[k][0] - want[0]) < 1e-8);
      CHECK(std::fabs(e.states[k][1] - want[1]) < 1e-8);
    }
    CHECK(sup_abs(e.states.back()) > 1e-3);
  }

  TEST_CASE("error field convergence order on the linear system") {
    const LinearPair lp;
    const DenseModel m = lp.model();
    const std::array<double, 2> rho0{0.1, 0.9};
    const auto want = lp.error_field(rho0, 2.0);
    std::vector<double> errs;
    // Coarser steps are pre-asymptotic: stage errors partly cancel there.
    for (double h : {0.05, 0.025, 0.0125}) {
      const OdeSolution e = solve_error_field(m, RealState{0.1, 0.9}, 2.0, h);
      errs.push_back(std::max(std::fabs(e.states.back()[0] - want[0]),
                              std::fabs(e.states.back()[1] - want[1])));
    }
    CHECK(std::log2(errs[0] / errs[1]) >= 3.5);
    CHECK(std::log2(errs[1] / errs[2]) >= 3.5);
  }

  TEST_CASE("single site error field vanishes") {
    const OdeSolution e = solve_error_field(logistic_model(), RealState{0.1}, 3.0, 0.01);
    for (const RealState& s : e.states) CHECK(s[0] == 0.0);
  }

  TEST_CASE("equilibrium start gives a vanishing error field") {
    const GaussConv1DModel m(300, 10.0, 1.0);
    const RealState eq = find_equilibrium(m, RealState(300, 0.5));
    CHECK(sup_abs(m.drift(eq)) < 1e-12);
    const OdeSolution e = solve_error_field(m, eq, 3.0, 0.01, 30);
    for (const RealState& s : e.states) CHECK(sup_abs(s) < 1e-10);
  }

  TEST_CASE("error field stays within its growth bound") {
    const GaussConv1DModel m(500, 20.0, 1.0);
    RealState rho0(500, 0.0);
    for (std::size_t i = 0; i < 500; i += 10) rho0[i] = 1.0;
    const OdeSolution e = solve_error_field(m, rho0, 3.0, 0.005, 20);
    double sup = 0.0;
    for (const RealState& s : e.states) sup = std::max(sup, sup_abs(s));
    CHECK(sup > 0.0);
    CHECK(sup <= 1.05 * e_growth_bound(m.norm_constants(), 3.0));
  }

  TEST_CASE("both error field overloads agree") {
    const GaussConv1DModel m(100, 10.0, 1.0);
    const RealState rho0(100, 0.2);
    const OdeSolution rho = solve_rho(m, rho0, 1.0, 0.01);
    const OdeSolution a = solve_error_field(m, rho, 1.0, 0.01, 10);
    const OdeSolution b = solve_error_field(m, rho0, 1.0, 0.01, 10);
    CHECK(a.states == b.states);
    CHECK_THROWS_AS(solve_error_field(m, rho, 2.0, 0.01), ConfigError);
  }

  TEST_CASE("solver errors and validation") {
    const IndependentSitesModel stiff({100.0}, {100.0});
    CHECK_THROWS_AS(solve_rho(stiff, RealState{0.0}, 1.0, 0.5), SolverError);
    const GaussConv1DModel m(10, 2.0, 1.0);
    CHECK_THROWS_AS(solve_rho(m, RealState(9, 0.1), 1.0, 0.1), ConfigError);
    CHECK_THROWS_AS(solve_rho(m, RealState(10, 1.5), 1.0, 0.1), ConfigError);
    CHECK_THROWS_AS(solve_rho(m, RealState(10, 0.1), 1.0, 0.0), ConfigError);
    CHECK_THROWS_AS(solve_rho_delta(m, RealState(10, 0.1), -0.1, 1.0), ConfigError);
  }

  TEST_CASE("weighted mean") {
    const RealState e{1.0, 2.0, 3.0, 6.0};
    CHECK(weighted_mean(e) == 3.0);
    CHECK(weighted_mean(e, std::vector<double>{1.0, 0.0, 0.0, 1.0}) == 1.75);
    CHECK_THROWS_AS(weighted_mean(e, std::vector<double>{1.0}), ConfigError);
  }
}
