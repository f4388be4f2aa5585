#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "spinsim/coupling.hpp"
#include "spinsim/deterministic.hpp"
#include "spinsim/errors.hpp"
#include "spinsim/models.hpp"
#include "spinsim/stream_bank.hpp"
#include "support/oracles.hpp"

using namespace spinsim;

namespace {

SimConfig gauss_config() {
  SimConfig cfg;
  cfg.t_end = 2.0;
  cfg.sample_every = 0.1;
  cfg.seed = 17;
  cfg.init = InitSpec::fraction(0.1);
  cfg.record_snapshots = true;
  return cfg;
}

void check_series_invariants(const CoupledRun& run) {
  for (const MethodSeries& s : run.errors.methods) {
    REQUIRE(!s.frac_diff.empty());
    CHECK(s.frac_diff.front() == 0.0);
    CHECK(s.cummax_frac_diff.front() == 0.0);
    for (std::size_t j = 0; j < s.frac_diff.size(); ++j) {
      CHECK(s.frac_diff[j] >= 0.0);
      CHECK(s.frac_diff[j] <= 1.0);
      CHECK(s.cummax_frac_diff[j] >= s.frac_diff[j]);
      if (j > 0) CHECK(s.cummax_frac_diff[j] >= s.cummax_frac_diff[j - 1]);
    }
  }
}

}  // namespace

TEST_SUITE("coupling") {
  TEST_CASE("stream bank arrivals are increasing and reproducible") {
    const PoissonStreamBank bank(2024), again(2024), other(2025);
    for (std::size_t site : {0u, 7u, 1000u}) {
      for (Direction dir : {Direction::up, Direction::down}) {
        StreamCursor c = bank.open(site, dir);
        double last = 0.0;
        for (std::uint64_t k = 0; k < 200; ++k) {
          CHECK(c.index == k);
          CHECK(c.next_arrival > last);
          CHECK(c.next_arrival == again.arrival(site, dir, k));
          last = c.next_arrival;
          bank.advance(c, site, dir);
        }
        CHECK(bank.gap(site, dir, 3) != other.gap(site, dir, 3));
      }
    }
    CHECK(bank.gap(0, Direction::up, 0) != bank.gap(0, Direction::down, 0));
  }

  TEST_CASE("stream bank gaps are unit exponential") {
    const PoissonStreamBank bank(5);
    double sum = 0.0, sum2 = 0.0;
    const int count = 100000;
    for (int k = 0; k < count; ++k) {
      const double g = bank.gap(static_cast<std::size_t>(k % 97), Direction::up, k / 97);
      sum += g;
      sum2 += g * g;
    }
    CHECK(std::fabs(sum / count - 1.0) < 0.015);
    CHECK(std::fabs(sum2 / count - 2.0) < 0.06);
  }

  TEST_CASE("coupled paths equal standalone runs on the same bank") {
    const GaussConv1DModel model(300, 10.0, 1.0);
    const SimConfig base = gauss_config();
    const double delta = 0.05;
    const CoupledRun run = couple_run(model, base, {MethodSpec{Method::euler, delta, ""},
                                                    MethodSpec{Method::midpoint, delta, ""}});
    REQUIRE(run.specs.size() == 3);
    CHECK(run.specs[0].label == "exact");
    CHECK(run.specs[1].label == "euler");
    CHECK(run.specs[2].label == "midpoint");
    const PoissonStreamBank bank(base.seed);
    SimConfig cfg = base;
    cfg.delta = delta;
    const TrajectoryRecord exact = simulate_exact(model, base, bank);
    const TrajectoryRecord euler = simulate_euler(model, cfg, bank);
    const TrajectoryRecord mid = simulate_midpoint(model, cfg, bank);
    CHECK(run.records[0].snapshots == exact.snapshots);
    CHECK(run.records[0].events_cum == exact.events_cum);
    CHECK(run.records[1].snapshots == euler.snapshots);
    CHECK(run.records[1].events_cum == euler.events_cum);
    CHECK(run.records[2].snapshots == mid.snapshots);
    CHECK(run.records[2].events_cum == mid.events_cum);
    CHECK(run.records[0].event_count > 0);
  }

  TEST_CASE("a process's path does not depend on its companions") {
    const GaussConv1DModel model(200, 8.0, 1.0);
    const SimConfig cfg = gauss_config();
    const CoupledRun alone = couple_run(model, cfg, {MethodSpec{Method::euler, 0.1, ""}});
    const CoupledRun crowd = couple_run(
        model, cfg,
        {MethodSpec{Method::midpoint, 0.05, "m"}, MethodSpec{Method::euler, 0.1, "e"},
         MethodSpec{Method::euler, 0.02, "e2"}});
    CHECK(alone.records[0].snapshots == crowd.records[0].snapshots);
    CHECK(alone.records[1].snapshots == crowd.records[2].snapshots);
    CHECK(alone.errors.methods[0].frac_diff == crowd.errors.methods[1].frac_diff);
  }

  TEST_CASE("metrics agree with the recorded snapshots") {
    const GaussConv1DModel model(250, 10.0, 1.0);
    const SimConfig cfg = gauss_config();
    const double delta = 0.04;
    const CoupledRun run = couple_run(model, cfg, {MethodSpec{Method::euler, delta, ""}});
    check_series_invariants(run);
    const MethodSeries& s = run.errors.methods[0];
    for (std::size_t j = 0; j < run.errors.times.size(); ++j) {
      double diff = 0.0, signed_sum = 0.0;
      for (std::size_t i = 0; i < 250; ++i) {
        const int a = run.records[0].snapshots[j][i], b = run.records[1].snapshots[j][i];
        diff += std::abs(a - b);
        signed_sum += a - b;
      }
      CHECK(s.frac_diff[j] == doctest::Approx(diff / 250.0).epsilon(1e-14));
      CHECK(s.normalized_error[j] == doctest::Approx(signed_sum / (250.0 * delta)));
    }
  }

  TEST_CASE("state-independent rates give identical coupled paths") {
    oracle::TestRng rng(3);
    std::vector<double> up(400), down(400);
    for (std::size_t i = 0; i < 400; ++i) {
      up[i] = rng.uniform(0.0, 2.0);
      down[i] = rng.uniform(0.0, 2.0);
    }
    const IndependentSitesModel model(up, down);
    SimConfig cfg = gauss_config();
    cfg.init = InitSpec::bernoulli(0.5);
    const CoupledRun run = couple_run(
        model, cfg, {MethodSpec{Method::euler, 0.1, ""}, MethodSpec{Method::midpoint, 0.05, ""}});
    check_series_invariants(run);
    for (const MethodSeries& s : run.errors.methods) {
      for (double d : s.frac_diff) CHECK(d == 0.0);
      for (double d : s.cummax_frac_diff) CHECK(d == 0.0);
    }
    CHECK(run.records[0].event_count == run.records[1].event_count);
    CHECK(run.records[0].event_count > 0);
  }

  TEST_CASE("zero rates: everything frozen, all metrics zero") {
    const IndependentSitesModel model(std::vector<double>(30, 0.0), std::vector<double>(30, 0.0));
    const CoupledRun run = couple_run(model, gauss_config(),
                                      {MethodSpec{Method::euler, 0.1, ""},
                                       MethodSpec{Method::midpoint, 0.1, ""}});
    for (const MethodSeries& s : run.errors.methods) {
      for (double d : s.frac_diff) CHECK(d == 0.0);
      for (double d : s.normalized_error) CHECK(d == 0.0);
    }
    for (const TrajectoryRecord& r : run.records) CHECK(r.event_count == 0);
  }

  TEST_CASE("coupled exact process has the two-state marginal law") {
    const double up = 1.5, down = 0.5, t = 0.8;
    const IndependentSitesModel model({up}, {down});
    const int reps = 40000;
    double ones = 0.0;
    SimConfig cfg;
    cfg.t_end = t;
    cfg.sample_every = t;
    cfg.init = InitSpec::explicit_state(SpinState(1));
    for (int r = 0; r < reps; ++r) {
      cfg.seed = replicate_seed(99, static_cast<std::uint64_t>(r));
      ones += simulate_exact(model, cfg, PoissonStreamBank(cfg.seed)).occupancy.back();
    }
    const double p = oracle::two_state_probability(up, down, 0, t);
    CHECK(std::fabs(ones / reps - p) < 3.0 * std::sqrt(p * (1.0 - p) / reps));
  }

  TEST_CASE("weights and validation") {
    const GaussConv1DModel model(50, 5.0, 1.0);
    SimConfig cfg = gauss_config();
    cfg.record_snapshots = false;
    const std::vector<double> bad(49, 1.0);
    CHECK_THROWS_AS(couple_run(model, cfg, {MethodSpec{Method::euler, 0.1, ""}}, bad), ConfigError);
    CHECK_THROWS_AS(couple_run(model, cfg, {MethodSpec{Method::euler, 0.0, ""}}), ConfigError);
    CHECK_THROWS_AS(couple_run(model, cfg, {MethodSpec{Method::midpoint, 5.0, ""}}), ConfigError);

    const std::vector<double> ones(50, 1.0), twice(50, 2.0);
    const auto a = couple_run(model, cfg, {MethodSpec{Method::euler, 0.1, ""}}, ones);
    const auto b = couple_run(model, cfg, {MethodSpec{Method::euler, 0.1, ""}}, twice);
    const auto c = couple_run(model, cfg, {MethodSpec{Method::euler, 0.1, ""}});
    for (std::size_t j = 0; j < a.errors.times.size(); ++j) {
      CHECK(b.errors.methods[0].normalized_error[j] ==
            doctest::Approx(2.0 * a.errors.methods[0].normalized_error[j]));
      CHECK(c.errors.methods[0].normalized_error[j] == a.errors.methods[0].normalized_error[j]);
    }
  }

  TEST_CASE("replicate seeds are distinct") {
    std::set<std::uint64_t> seeds;
    for (std::uint64_t r = 0; r < 500; ++r) seeds.insert(replicate_seed(1, r));
    CHECK(seeds.size() == 500);
  }

  TEST_CASE("normalized error experiment: trivial cases") {
    const IndependentSitesModel zero(std::vector<double>(20, 0.0), std::vector<double>(20, 0.0));
    SimConfig cfg;
    cfg.t_end = 1.0;
    cfg.sample_every = 0.1;
    cfg.seed = 4;
    const NormalizedErrorSeries z =
        normalized_error_experiment(zero, cfg, MethodSpec{Method::euler, 0.05, ""}, 4);
    for (double v : z.observed_mean) CHECK(v == 0.0);
    for (double v : z.predicted) CHECK(v == 0.0);
    CHECK(z.replicates == 4);

    const GaussConv1DModel model(400, 10.0, 1.0);
    const RealState eq = find_equilibrium(model, RealState(400, 0.5));
    cfg.init = InitSpec::profile(eq);
    const NormalizedErrorSeries e =
        normalized_error_experiment(model, cfg, MethodSpec{Method::euler, 0.05, ""}, 3);
    CHECK(e.times.size() == 11);
    for (double v : e.predicted) CHECK(std::fabs(v) < 1e-9);
    CHECK_THROWS_AS(normalized_error_experiment(model, cfg, MethodSpec{Method::exact, 0.0, ""}, 3),
                    ConfigError);
    CHECK_THROWS_AS(normalized_error_experiment(model, cfg, MethodSpec{Method::euler, 0.05, ""}, 0),
                    ConfigError);
  }

  TEST_CASE("normalized error experiment is reproducible") {
    const GaussConv1DModel model(200, 10.0, 1.0);
    SimConfig cfg;
    cfg.t_end = 0.5;
    cfg.sample_every = 0.1;
    cfg.seed = 12;
    cfg.init = InitSpec::fraction(0.1);
    const MethodSpec m{Method::euler, 0.05, ""};
    const NormalizedErrorSeries a = normalized_error_experiment(model, cfg, m, 6);
    const NormalizedErrorSeries b = normalized_error_experiment(model, cfg, m, 6);
    CHECK(a.observed_mean == b.observed_mean);
    CHECK(a.observed_stderr == b.observed_stderr);
    CHECK(a.predicted == b.predicted);
  }

  TEST_CASE("bench rows") {
    BenchOptions opt;
    opt.exponents = {2, 3};
    opt.reps = 2;
    const std::vector<BenchRow> rows = bench_speedup(opt);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].method == "exact");
    CHECK(rows[0].speedup_vs_exact == 1.0);
    CHECK(rows[1].method == "euler");
    CHECK(rows[1].delta == doctest::Approx(0.25));
    CHECK(rows[2].method == "midpoint");
    CHECK(rows[2].delta == doctest::Approx(0.5));
    CHECK(rows[3].n == 64);
    for (const BenchRow& r : rows) {
      CHECK(r.mean_wall_ns > 0.0);
      CHECK(r.speedup_stderr >= 0.0);
      CHECK(r.reps == 2);
    }
    opt.reps = 0;
    CHECK_THROWS_AS(bench_speedup(opt), ConfigError);
    opt.reps = 1;
    opt.exponents = {0};
    CHECK_THROWS_AS(bench_speedup(opt), ConfigError);
  }
}
