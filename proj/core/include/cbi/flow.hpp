#pragma once

#include <vector>

#include "cbi/mechanisms.hpp"
#include "cbi/quadrature.hpp"

namespace cbi {

// Cumulant flow of Ψ together with the chart φ(λ) = ∫_λ^{λ₀} du/|Ψ(u)| and its
// inverse g. Immutable once built.
class FlowEvaluator {
 public:
  static constexpr double lambda_big = 1e8;
  static constexpr double table_floor = 1e-12;
  static constexpr int table_nodes = 4096;

  // lambda0 NaN selects 1 (b ≥ 0) or ρ/2 (b < 0, ρ finite)
  explicit FlowEvaluator(BranchingMechanism psi, double lambda0 = std::numeric_limits<double>::quiet_NaN(),
                         quad::Options opt = {});

  const BranchingMechanism& psi() const { return psi_; }
  const Criticality& crit() const { return crit_; }
  double lambda0() const { return lambda0_; }

  double varphi(double lam) const;
  double g_inv(double x) const;

  double v_forward(double t, double lam) const;
  // ln v_t(e^{log_lam}); usable for arguments far below the double range
  double log_v_forward(double t, double log_lam) const;
  double v_backward(double t, double lam) const;
  double rho_t(double t) const;
  // v̄_t = v_t(∞), +inf without Grey's condition
  double vbar(double t) const;

  // ODE branch only, for cross-checking the other dispatch paths
  double v_ode(double t, double lam) const;
  bool has_closed_form() const { return closed_ != Closed::None; }

 private:
  enum class Closed { None, Stable, Logistic };

  BranchingMechanism psi_;
  Criticality crit_;
  double lambda0_;
  quad::Options opt_;
  Closed closed_ = Closed::None;
  bool greys_ = false;
  bool zero_ = false;

  double y0_ = 0.0, h_ = 0.0;
  std::vector<double> phi_tab_, dphi_tab_;

  bool has_table() const { return !phi_tab_.empty(); }
  double varphi_log(double y) const;       // φ(e^y)
  double varphi_below_table(double y) const;
  double g_log(double x) const;            // ln g(x)
  double log_v_ode(double t, double w) const;
  bool chart_forward(double t, double lam, double& out) const;
};

}  // namespace cbi
