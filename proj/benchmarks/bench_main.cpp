#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "cbi/flow.hpp"
#include "cbi/limit_laws.hpp"
#include "cbi/mechanisms.hpp"
#include "cbi/quadrature.hpp"
#include "cbi/renorm.hpp"
#include "cbi/simulate.hpp"
#include "cbi/stats.hpp"

using namespace cbi;

static void BM_Quadrature(benchmark::State& state) {
  for (auto _ : state) {
    auto r = quad::integrate_geometric([](double x) { return std::exp(-x) / std::sqrt(x); }, 1e-12, 40.0);
    benchmark::DoNotOptimize(r.value);
  }
}
BENCHMARK(BM_Quadrature);

static void BM_PsiGeneral(benchmark::State& state) {
  auto psi = BranchingMechanism::general(0.2, 0.5, TailFunction::power_law(0.3, 1.5));
  double q = 0.37;
  for (auto _ : state) {
    benchmark::DoNotOptimize(psi(q));
    q = q * 1.01 + 1e-3;
    if (q > 1e3) q = 0.37;
  }
}
BENCHMARK(BM_PsiGeneral);

static void BM_PhiLogTail(benchmark::State& state) {
  auto phi = ImmigrationMechanism::tail(0.0, TailFunction::one_over_log_loglog());
  double q = 0.37;
  for (auto _ : state) {
    benchmark::DoNotOptimize(phi(q));
    q = q * 1.01 + 1e-3;
    if (q > 1e3) q = 0.37;
  }
}
BENCHMARK(BM_PhiLogTail);

static void BM_FlowBuild(benchmark::State& state) {
  auto psi = BranchingMechanism::general(-0.5, 1.0, TailFunction::exponential(2.0, 1.5));
  for (auto _ : state) {
    FlowEvaluator fe(psi);
    benchmark::DoNotOptimize(fe.lambda0());
  }
}
BENCHMARK(BM_FlowBuild)->Unit(benchmark::kMillisecond);

static void BM_FlowForward(benchmark::State& state) {
  FlowEvaluator fe(BranchingMechanism::general(-0.5, 1.0, TailFunction::exponential(2.0, 1.5)));
  double lam = 0.01;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fe.v_forward(3.0, lam));
    lam = lam < 100.0 ? lam * 1.1 : 0.01;
  }
}
BENCHMARK(BM_FlowForward);

static void BM_RenormEval(benchmark::State& state) {
  RenormEvaluator re(BranchingMechanism::quadratic(1.0, 0.0),
                     ImmigrationMechanism::tail(0.0, TailFunction::c_over_log(2.0)));
  double t = 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(re.r_eval(t, 0.5));
    t = t < 100.0 ? t * 1.1 : 1.0;
  }
}
BENCHMARK(BM_RenormEval);

static void BM_ClassifyRegime(benchmark::State& state) {
  RenormEvaluator re(BranchingMechanism::stable(1.0, 1.0), ImmigrationMechanism::stable(1.0, 0.5), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(re.classify_regime().delta);
}
BENCHMARK(BM_ClassifyRegime)->Unit(benchmark::kMillisecond);

static void BM_SimulateExact(benchmark::State& state) {
  SimConfig cfg{BranchingMechanism::quadratic(0.0, std::sqrt(2.0)), ImmigrationMechanism::linear(1.0), 1.0, 5.0,
                ExactQuadratic{}, 1, static_cast<std::size_t>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(simulate_ensemble(cfg).size());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateExact)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_SimulateEuler(benchmark::State& state) {
  SimConfig cfg{BranchingMechanism::logistic(), ImmigrationMechanism::linear(1.0), 1.0, 1.0, EulerJump{1e-3}, 1,
                static_cast<std::size_t>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(simulate_ensemble(cfg).size());
  state.SetItemsProcessed(state.iterations() * state.range(0) * 1000);
}
BENCHMARK(BM_SimulateEuler)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_SimulateSplitStable(benchmark::State& state) {
  SimConfig cfg{BranchingMechanism::stable(1.0, 0.5), ImmigrationMechanism::stable(1.0, 0.8), 0.0, 10.0,
                SplitStep{0.01}, 1, static_cast<std::size_t>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(simulate_ensemble(cfg).size());
  state.SetItemsProcessed(state.iterations() * state.range(0) * 1000);
}
BENCHMARK(BM_SimulateSplitStable)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_EmpiricalLt(benchmark::State& state) {
  std::vector<double> ys(state.range(0));
  for (std::size_t i = 0; i < ys.size(); ++i) ys[i] = std::exp(std::sin(double(i)) * 5.0);
  const double th[] = {0.5, 1.0, 2.0};
  for (auto _ : state) benchmark::DoNotOptimize(empirical_lt(ys, th).front().mean);
}
BENCHMARK(BM_EmpiricalLt)->Arg(100000);

static void BM_KsDistance(benchmark::State& state) {
  std::vector<double> ys(state.range(0));
  for (std::size_t i = 0; i < ys.size(); ++i) ys[i] = std::abs(std::sin(double(i))) * 3.0;
  for (auto _ : state) benchmark::DoNotOptimize(ks_distance(ys, Exp1{}));
}
BENCHMARK(BM_KsDistance)->Arg(100000);

BENCHMARK_MAIN();
