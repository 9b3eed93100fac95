#include <doctest.h>

#include <cmath>

#include "cbi/error.hpp"
#include "cbi/flow.hpp"
#include "oracles.hpp"

using namespace cbi;
using doctest::Approx;

namespace {

// v_t(λ) from dv/dt = −Ψ(v)
double rk4_forward(const BranchingMechanism& psi, double t, double lam) {
  return oracle::rk4([&](double v) { return -psi(v); }, lam, t);
}

}  // namespace

TEST_CASE("varphi") {
  FlowEvaluator st(BranchingMechanism::stable(1.0, 1.0), 1.0);
  CHECK(st.varphi(0.5) == Approx(1.0));
  CHECK(st.varphi(1.0) == Approx(0.0));
  FlowEvaluator half(BranchingMechanism::stable(1.0, 0.5), 1.0);
  double q = oracle::simpson([](double u) { return 1.0 / std::pow(u, 1.5); }, 0.25, 1.0);
  CHECK(q == Approx(2.0).epsilon(1e-10));
  CHECK(half.varphi(0.25) == Approx(2.0).epsilon(1e-10));
}

TEST_CASE("varphi on a general mechanism matches quadrature") {
  auto psi = BranchingMechanism::general(0.0, 1.0, TailFunction::exponential(1.0, 1.0));
  FlowEvaluator fe(psi, 1.0);
  for (double lam : {0.5, 0.1, 0.01}) {
    double ref = oracle::simpson([&](double y) { return std::exp(y) / psi(std::exp(y)); }, std::log(lam), 0.0);
    CHECK(fe.varphi(lam) == Approx(ref).epsilon(1e-8));
  }
}

TEST_CASE("g is the inverse chart") {
  FlowEvaluator st(BranchingMechanism::stable(1.0, 1.0), 1.0);
  CHECK(st.g_inv(1.0) == Approx(0.5));
  CHECK(st.g_inv(1e-12) == Approx(1.0).epsilon(1e-9));
  FlowEvaluator half(BranchingMechanism::stable(1.0, 0.5), 1.0);
  CHECK(half.g_inv(2.0) == Approx(0.25));
  auto psi = BranchingMechanism::general(0.3, 0.5, TailFunction::table({{1.0, 2.0}}));
  FlowEvaluator fe(psi, 1.0);
  for (double x : {0.1, 3.0, 40.0}) CHECK(fe.varphi(fe.g_inv(x)) == Approx(x).epsilon(1e-8));
}

TEST_CASE("forward flow") {
  FlowEvaluator st(BranchingMechanism::stable(1.0, 1.0));
  CHECK(st.v_forward(1.0, 1.0) == Approx(0.5));
  CHECK(rk4_forward(BranchingMechanism::stable(1.0, 1.0), 1.0, 1.0) == Approx(0.5).epsilon(1e-12));
  CHECK(st.v_forward(0.0, 0.7) == 0.7);
  FlowEvaluator lg(BranchingMechanism::logistic());
  double ref = rk4_forward(BranchingMechanism::logistic(), std::log(2.0), 0.5);
  CHECK(ref == Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(lg.v_forward(std::log(2.0), 0.5) == Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("forward flow of a general mechanism against RK4") {
  auto psi = BranchingMechanism::general(-0.5, 1.0, TailFunction::exponential(2.0, 1.5));
  FlowEvaluator fe(psi);
  for (double t : {0.1, 1.0, 4.0})
    for (double lam : {0.05, 0.7, 6.0}) {
      double ref = rk4_forward(psi, t, lam);
      CHECK(fe.v_forward(t, lam) == Approx(ref).epsilon(1e-7));
      CHECK(fe.v_ode(t, lam) == Approx(ref).epsilon(1e-7));
    }
}

TEST_CASE("semigroup property") {
  auto psi = BranchingMechanism::general(0.2, 0.8, TailFunction::power_law(0.4, 1.5));
  FlowEvaluator fe(psi);
  for (double lam : {0.01, 1.0, 100.0})
    CHECK(fe.v_forward(1.7, fe.v_forward(0.8, lam)) == Approx(fe.v_forward(2.5, lam)).epsilon(1e-8));
}

TEST_CASE("backward flow") {
  FlowEvaluator lg(BranchingMechanism::logistic());
  CHECK(lg.v_backward(std::log(2.0), 2.0 / 3.0) == Approx(0.5).epsilon(1e-12));
  CHECK(lg.v_backward(0.0, 0.3) == 0.3);
  FlowEvaluator st(BranchingMechanism::stable(1.0, 1.0));
  double ref = oracle::bisect([&](double l) { return st.v_forward(3.0, l) - 0.25; }, 0.25, 100.0);
  CHECK(ref == Approx(1.0).epsilon(1e-10));
  CHECK(st.v_backward(3.0, 0.25) == Approx(1.0).epsilon(1e-10));
  CHECK_THROWS_AS(st.v_backward(5.0, 0.25), Error);
}

TEST_CASE("supercritical backward ratio tends to e^{bu}") {
  FlowEvaluator lg(BranchingMechanism::logistic());
  double r = lg.v_backward(31.0, 0.5) / lg.v_backward(30.0, 0.5);
  CHECK(r == Approx(std::exp(-1.0)).epsilon(0.01));
  CHECK(lg.v_backward(2.0, 0.5) < lg.v_backward(1.0, 0.5));
}

TEST_CASE("rho_t") {
  FlowEvaluator sub(BranchingMechanism::quadratic(1.0, 1.0));
  CHECK(sub.rho_t(3.0) == 1.0);
  FlowEvaluator lg(BranchingMechanism::logistic(), 0.5);
  CHECK(lg.rho_t(0.0) == Approx(0.5));
  CHECK(lg.rho_t(std::log(3.0)) == Approx(0.25).epsilon(1e-12));
}

TEST_CASE("vbar under Grey's condition") {
  FlowEvaluator st(BranchingMechanism::stable(1.0, 1.0));
  CHECK(st.vbar(2.0) == Approx(0.5));
  FlowEvaluator q(BranchingMechanism::quadratic(1.0, 0.0));
  CHECK(std::isinf(q.vbar(1.0)));
}

TEST_CASE("extreme arguments stay finite") {
  FlowEvaluator st(BranchingMechanism::stable(1.0, 0.5));
  double lv = st.log_v_forward(1.0, -800.0);
  CHECK(std::isfinite(lv));
  CHECK(lv == Approx(-800.0).epsilon(1e-6));
  CHECK(st.v_forward(1.0, 1e300) > 0.0);
}
