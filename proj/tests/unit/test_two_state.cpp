#include <cmath>
#include <limits>

#include "doctest.h"
#include "spinsim/errors.hpp"
#include "spinsim/two_state.hpp"
#include "support/oracles.hpp"

using namespace spinsim;

TEST_SUITE("two_state") {
  TEST_CASE("zero step leaves the state unchanged") {
    CHECK(transition_probability(2.0, 1.0, 0, 0.0) == 0.0);
    CHECK(transition_probability(2.0, 1.0, 1, 0.0) == 1.0);
  }

  TEST_CASE("zero total rate freezes the site") {
    CHECK(transition_probability(0.0, 0.0, 0, 5.0) == 0.0);
    CHECK(transition_probability(0.0, 0.0, 1, 5.0) == 1.0);
  }

  TEST_CASE("long steps reach the stationary law") {
    CHECK(transition_probability(1.0, 1.0, 0, 1e3) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(transition_probability(1.0, 1.0, 1, 1e3) == doctest::Approx(0.5).epsilon(1e-14));
  }

  TEST_CASE("worked value q_up = 2, q_down = 1, delta = 0.1") {
    const double p = transition_probability(2.0, 1.0, 0, 0.1);
    CHECK(p == doctest::Approx(2.0 / 3.0 * (1.0 - std::exp(-0.3))).epsilon(1e-14));
    CHECK(p == doctest::Approx(0.172788).epsilon(1e-6));
    CHECK(std::fabs(p - oracle::two_state_probability(2.0, 1.0, 0, 0.1)) < 1e-14);
  }

  TEST_CASE("agrees with the matrix exponential on random triples") {
    oracle::TestRng rng(99);
    for (int k = 0; k < 500; ++k) {
      const double up = rng.uniform(0.0, 10.0);
      const double down = rng.uniform(0.0, 10.0);
      const double delta = rng.uniform(0.0, 2.0);
      for (int eta = 0; eta < 2; ++eta) {
        const double p = transition_probability(up, down, eta, delta);
        CHECK(std::fabs(p - oracle::two_state_probability(up, down, eta, delta)) <= 1e-12);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
      }
    }
  }

  TEST_CASE("tiny total rates keep full relative accuracy") {
    const double p = transition_probability(1e-18, 0.0, 0, 1.0);
    CHECK(p == doctest::Approx(1e-18).epsilon(1e-12));
  }

  TEST_CASE("monotone in the up rate from state 0") {
    double last = 0.0;
    for (int k = 0; k <= 50; ++k) {
      const double p = transition_probability(0.2 * k, 1.0, 0, 0.3);
      CHECK(p >= last);
      last = p;
    }
  }

  TEST_CASE("invalid inputs raise a domain error") {
    CHECK_THROWS_AS(transition_probability(-1.0, 1.0, 0, 0.1), DomainError);
    CHECK_THROWS_AS(transition_probability(1.0, -1.0, 0, 0.1), DomainError);
    CHECK_THROWS_AS(transition_probability(1.0, 1.0, 0, -0.1), DomainError);
    CHECK_THROWS_AS(transition_probability(1.0, 1.0, 2, 0.1), DomainError);
    CHECK_THROWS_AS(
        transition_probability(std::numeric_limits<double>::infinity(), 1.0, 0, 0.1),
        DomainError);
  }
}
