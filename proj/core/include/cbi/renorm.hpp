#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cbi/flow.hpp"
#include "cbi/mechanisms.hpp"

namespace cbi {

enum class Regime { Convergent, S, L, F };
enum class Transience { Recurrent, Transient, Inconclusive };

const char* to_string(Regime r);
const char* to_string(Transience t);

struct RegimeThresholds {
  double s_threshold = 0.05;
  double l_spread = 0.10;
  double f_threshold = 20.0;
};

struct RegimeReport {
  Regime regime = Regime::Convergent;
  double a = std::numeric_limits<double>::quiet_NaN();      // L only
  double delta = std::numeric_limits<double>::quiet_NaN();  // F only
  std::vector<std::pair<double, double>> trace;              // (x, x·H′(x))
  RegimeThresholds thresholds;
};

struct TransienceReport {
  Transience verdict = Transience::Inconclusive;
  std::vector<double> decade_integrals;  // ∫ e^{-H} over [10^k, 10^{k+1}]
  double tail_ratio = 0.0;
  bool has_regime = false;
  RegimeReport regime;
};

class RenormEvaluator {
 public:
  RenormEvaluator(BranchingMechanism psi, ImmigrationMechanism phi,
                  double lambda0 = std::numeric_limits<double>::quiet_NaN(), quad::Options opt = {},
                  RegimeThresholds thr = {});
  explicit RenormEvaluator(const Scenario& sc);

  const FlowEvaluator& flow() const { return flow_; }
  const BranchingMechanism& psi() const { return flow_.psi(); }
  const ImmigrationMechanism& phi() const { return phi_; }
  Divergence divergence() const;

  double r_eval(double t, double lam) const;
  // r_t(e^{log_lam}); accepts arguments far outside the double range of e^{log_lam}
  double r_eval_log(double t, double log_lam) const;
  double r_infinity(double t) const;
  double c_eval(double t, double target) const;

  // ∫_a^b Φ(u)/Ψ(u) du with a, b given as logarithms; singular-root error if ρ lies in between
  double log_integral(double ya, double yb) const;
  // ∫_0^u Φ/Ψ, requires the convergent-immigration case
  double integral_from_zero(double u) const;

  double H_eval(double x) const;
  double H_prime(double x) const;
  RegimeReport classify_regime() const;
  double h_inverse(double y) const;
  double m_eval(double x) const;
  double log_m(double log_x) const;
  TransienceReport transience_test() const;

 private:
  FlowEvaluator flow_;
  ImmigrationMechanism phi_;
  quad::Options opt_;
  RegimeThresholds thr_;
  bool stable_pair_equal_ = false;

  double time_integral(double T, double log_start) const;
};

}  // namespace cbi
