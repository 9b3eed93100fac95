#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cbi/error.hpp"
#include "cbi/stats.hpp"

using namespace cbi;
using doctest::Approx;

TEST_CASE("empirical Laplace transform") {
  std::vector<double> twos(10, 2.0);
  const double th[] = {1.0, 0.0};
  auto p = empirical_lt(twos, th);
  CHECK(p[0].theta == 1.0);
  CHECK(p[0].mean == Approx(std::exp(-2.0)));
  CHECK(p[0].stderr_ == Approx(0.0));
  CHECK(p[1].mean == 1.0);
  CHECK(p[1].stderr_ == 0.0);
  std::vector<double> mixed{0.0, std::numeric_limits<double>::infinity()};
  const double one[] = {1.0};
  auto q = empirical_lt(mixed, one);
  CHECK(q[0].mean == Approx(0.5));
  CHECK(q[0].stderr_ == Approx(0.5));
  std::vector<double> empty;
  CHECK_THROWS_AS(empirical_lt(empty, one), Error);
}

TEST_CASE("KS distance") {
  const int n = 999;
  std::vector<double> q;
  for (int i = 1; i <= n; ++i) q.push_back(-std::log(1.0 - double(i) / (n + 1)));
  CHECK(ks_distance(q, Exp1{}) <= 1.0 / (n + 1) + 1e-12);
  std::vector<double> ones(100, 1.0);
  CHECK(ks_distance(ones, Exp1{}) >= 1.0 - std::exp(-1.0) - 1e-12);
  std::vector<double> uf;
  const int m = 10000;
  for (int i = 0; i < m; ++i) {
    double u = (i + 0.5) / m;
    uf.push_back(std::pow(-std::log(u), -1.0 / 0.5));  // inverse of exp(−z^{-δ})
  }
  CHECK(ks_distance(uf, UFLaw{0.5}) <= 2.0 / std::sqrt(double(m)));
  CHECK_THROWS_AS(ks_distance(q, VLLaw{}), Error);
}

TEST_CASE("theorem identifiers") {
  const auto& ids = theorem_ids();
  for (const char* id : {"main_exp_limit", "ratio", "regime_S", "regime_L", "regime_F", "critical_L", "critical_F",
                         "subordinator"})
    CHECK(std::find(ids.begin(), ids.end(), id) != ids.end());
}

TEST_CASE("verify_theorem rejects mismatched hypotheses") {
  Scenario conv{BranchingMechanism::stable(1.0, 0.5), ImmigrationMechanism::stable(1.0, 0.8)};
  const double ts[] = {5.0};
  try {
    verify_theorem(conv, "regime_L", ts, 100, 1);
    FAIL("expected a hypothesis mismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::HypothesisMismatch);
  }
  CHECK_THROWS_AS(verify_theorem(conv, "no_such_theorem", ts, 100, 1), Error);
  Scenario sub{BranchingMechanism::quadratic(1.0, 0.0), ImmigrationMechanism::tail(0.0, TailFunction::c_over_log(2.0))};
  CHECK_THROWS_AS(stationary_check(sub, 5.0, 100, 1), Error);
}

TEST_CASE("verify_theorem on the slowly varying subordinator") {
  Scenario sc{BranchingMechanism::quadratic(0.0, 0.0), ImmigrationMechanism::tail(0.0, TailFunction::one_over_log())};
  const double ts[] = {50.0, 200.0};
  auto v = verify_theorem(sc, "subordinator", ts, 20000, 4);
  CHECK(v.per_t.size() == 2);
  CHECK(v.statistic == v.per_t.back());
  CHECK(v.pass == (v.statistic <= v.threshold));
  CHECK(v.statistic < 0.05);
  CHECK(v.n_paths == 20000);
  CHECK(!v.diagnostics.empty());
}

TEST_CASE("ratio experiment") {
  Scenario sc{BranchingMechanism::quadratic(1.0, 0.0), ImmigrationMechanism::tail(0.0, TailFunction::c_over_log(2.0))};
  const double ts[] = {20.0};
  auto v = verify_theorem(sc, "ratio", ts, 20000, 2);
  CHECK(v.pass);
  CHECK(v.auxiliary_ok);
}

TEST_CASE("stationary check") {
  Scenario lg{BranchingMechanism::logistic(), ImmigrationMechanism::linear(1.0), 1.0, 0.5};
  auto v = stationary_check(lg, 10.0, 20000, 3);
  CHECK(v.pass);
  Scenario st{BranchingMechanism::stable(1.0, 0.5), ImmigrationMechanism::stable(1.0, 0.8)};
  auto z = stationary_check(st, 0.0, 10, 1);
  REQUIRE(!z.diagnostics.empty());
  for (const auto& row : z.diagnostics)
    if (row.probe.find("lt") != std::string::npos) CHECK(row.empirical == 1.0);
}
