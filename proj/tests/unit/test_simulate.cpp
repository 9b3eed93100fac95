#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "cbi/error.hpp"
#include "cbi/limit_laws.hpp"
#include "cbi/random.hpp"
#include "cbi/simulate.hpp"
#include "cbi/stats.hpp"

using namespace cbi;
using doctest::Approx;

TEST_CASE("pure subordinator with drift is deterministic") {
  auto q0 = BranchingMechanism::quadratic(0.0, 0.0);
  auto lin = ImmigrationMechanism::linear(1.0);
  for (Scheme s : {Scheme{EulerJump{}}, Scheme{ExactQuadratic{}}, Scheme{SplitStep{0.1}}}) {
    Ensemble e = simulate_ensemble({q0, lin, 0.0, 2.0, s, 1, 50});
    for (double y : e.terminal_values) CHECK(y == Approx(2.0).epsilon(1e-12));
  }
  Ensemble d = simulate_subordinator(ImmigrationMechanism::tail(1.0, TailFunction::zero()), 5.0, 3, 20);
  for (double y : d.terminal_values) CHECK(y == Approx(5.0));
}

TEST_CASE("compound Poisson jump counts") {
  // unit jump rate and no drift: P(Y_1 = 0) = e^{-1}
  const std::size_t n = 100000;
  Ensemble e = simulate_subordinator(ImmigrationMechanism::tail(0.0, TailFunction::one_over_log()), 1.0, 11, n);
  double zeros = std::count(e.terminal_values.begin(), e.terminal_values.end(), 0.0);
  double p0 = zeros / n;
  CHECK(std::abs(p0 - std::exp(-1.0)) <= 3.0 * std::sqrt(p0 * (1 - p0) / n));
}

TEST_CASE("exact quadratic scheme matches the finite-time transform") {
  auto q2 = BranchingMechanism::quadratic(0.0, std::sqrt(2.0));
  auto lin = ImmigrationMechanism::linear(1.0);
  Ensemble e = simulate_ensemble({q2, lin, 0.0, 1.0, ExactQuadratic{}, 5, 100000});
  const double th[] = {1.0};
  auto p = empirical_lt(e, th);
  CHECK(std::abs(p[0].mean - 0.5) <= 3.0 * p[0].stderr_);
}

TEST_CASE("Euler scheme for the logistic mechanism") {
  auto logi = BranchingMechanism::logistic();
  auto lin = ImmigrationMechanism::linear(1.0);
  Ensemble e = simulate_ensemble({logi, lin, 1.0, 1.0, EulerJump{1e-3, 1e-4, 1}, 9, 20000});
  const double th[] = {1.0};
  auto p = empirical_lt(e, th);
  CHECK(std::abs(p[0].mean - finite_t_lt(logi, lin, 1.0, 1.0, 1.0)) <= 3.0 * p[0].stderr_ + 0.01);
}

TEST_CASE("seeded runs are reproducible and independent of thread count") {
  SimConfig cfg{BranchingMechanism::logistic(), ImmigrationMechanism::linear(1.0), 1.0, 0.5, EulerJump{1e-2}, 42, 64};
  setenv("CBI_THREADS", "1", 1);
  Ensemble a = simulate_ensemble(cfg);
  setenv("CBI_THREADS", "3", 1);
  Ensemble b = simulate_ensemble(cfg);
  unsetenv("CBI_THREADS");
  CHECK(a.terminal_values == b.terminal_values);
  CHECK(a.fingerprint == b.fingerprint);
  cfg.seed = 43;
  CHECK(simulate_ensemble(cfg).terminal_values != a.terminal_values);
  CHECK(fingerprint(cfg) != a.fingerprint);
  CHECK(rng::path_seed(1, 0) != rng::path_seed(1, 1));
}

TEST_CASE("log values agree with terminal values") {
  Ensemble e = simulate_ensemble(
      {BranchingMechanism::stable(1.0, 0.5), ImmigrationMechanism::stable(1.0, 0.8), 0.5, 1.0, SplitStep{0.1}, 2, 200});
  for (std::size_t i = 0; i < e.size(); ++i) {
    CHECK(e.terminal_values[i] >= 0.0);
    if (e.terminal_values[i] > 0 && std::isfinite(e.terminal_values[i]))
      CHECK(std::exp(e.log_values[i]) == Approx(e.terminal_values[i]).epsilon(1e-12));
  }
}

TEST_CASE("scheme admissibility") {
  auto lin = ImmigrationMechanism::linear(1.0);
  CHECK(exact_admissible(BranchingMechanism::quadratic(1.0, 1.0), lin));
  CHECK_FALSE(exact_admissible(BranchingMechanism::stable(1.0, 0.5), lin));
  CHECK(split_admissible(BranchingMechanism::stable(1.0, 0.5), ImmigrationMechanism::stable(1.0, 0.8)));
  CHECK(std::holds_alternative<EulerJump>(
      default_scheme(BranchingMechanism::general(0.0, 1.0, TailFunction::exponential(1.0, 1.0)), lin)));
  CHECK_THROWS_AS(simulate_ensemble({BranchingMechanism::stable(1.0, 0.5), lin, 0.0, 1.0, ExactQuadratic{}, 1, 1}),
                  Error);
  CHECK_THROWS_AS(simulate_ensemble({BranchingMechanism::logistic(), lin, 0.0, 1.0, ExactQuadratic{}, 1, 0}), Error);
}

TEST_CASE("random variates") {
  rng::Stream s(17);
  const int n = 200000;
  double acc = 0, accg = 0;
  for (int i = 0; i < n; ++i) {
    acc += std::exp(-rng::stable_positive(0.5, s));
    accg += s.gamma(2.5);
  }
  CHECK(acc / n == Approx(std::exp(-1.0)).epsilon(0.01));
  CHECK(accg / n == Approx(2.5).epsilon(0.01));
  // CIR mean: x e^{-bt} + β₀(1 − e^{-bt})/b
  double m = 0;
  for (int i = 0; i < n; ++i) m += rng::cir_transition(1.0, 1.0, 1.0, 1.0, 0.5, s);
  CHECK(m / n == Approx(std::exp(-0.5) + 1.0 - std::exp(-0.5)).epsilon(0.01));
}

TEST_CASE("martingale check for the logistic mechanism") {
  SimConfig cfg{BranchingMechanism::logistic(), ImmigrationMechanism::linear(1.0), 1.0, 0.0, ExactQuadratic{}, 3,
                20000};
  const double times[] = {0.0, 1.0, 2.0};
  auto pts = martingale_check(cfg, 0.5, times);
  REQUIRE(pts.size() == 3);
  CHECK(pts[0].mean == Approx(std::exp(-0.5)));
  CHECK(pts[0].stderr_ == 0.0);
  for (const auto& p : pts) CHECK(std::abs(p.mean - std::exp(-0.5)) <= 3.0 * p.stderr_ + 1e-12);
}

TEST_CASE("worker count") {
  setenv("CBI_THREADS", "5", 1);
  CHECK(worker_count() == 5);
  unsetenv("CBI_THREADS");
  CHECK(worker_count() >= 1);
}
