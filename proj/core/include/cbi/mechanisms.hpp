#pragma once

#include <limits>
#include <string>
#include <variant>

#include "cbi/tail.hpp"

namespace cbi {

// Ψ(q) = d q^{1+α}
struct StableBranching {
  double d = 1.0;
  double alpha = 1.0;
};
// Ψ(q) = b q + σ² q² / 2
struct QuadraticBranching {
  double b = 0.0;
  double sigma = 0.0;
};
// Ψ(q) = q² − q
struct LogisticBranching {};
// Ψ(q) = b q + σ² q² / 2 + ∫ (e^{-qz} − 1 + qz) π(dz), π given by its tail
struct GeneralBranching {
  double b = 0.0;
  double sigma = 0.0;
  TailFunction pi_tail;
};

class BranchingMechanism {
 public:
  using Kind = std::variant<StableBranching, QuadraticBranching, LogisticBranching, GeneralBranching>;

  BranchingMechanism() : BranchingMechanism(QuadraticBranching{}) {}
  explicit BranchingMechanism(Kind kind);

  static BranchingMechanism stable(double d, double alpha) { return BranchingMechanism(StableBranching{d, alpha}); }
  static BranchingMechanism quadratic(double b, double sigma) { return BranchingMechanism(QuadraticBranching{b, sigma}); }
  static BranchingMechanism logistic() { return BranchingMechanism(LogisticBranching{}); }
  static BranchingMechanism general(double b, double sigma, TailFunction pi) {
    return BranchingMechanism(GeneralBranching{b, sigma, std::move(pi)});
  }

  const Kind& kind() const { return kind_; }
  template <class T>
  const T* as() const { return std::get_if<T>(&kind_); }

  // Ψ′(0+)
  double b() const;
  // Gaussian coefficient σ (Stable α=1 is a pure diffusion with σ² = 2d)
  double sigma() const;
  bool is_zero() const;

  double operator()(double q) const;
  // Ψ(q)/q, equal to b at q = 0; finite for q far below the smallest double
  double over_q(double q) const;
  double derivative(double q) const;

  // Tail of π; Stable α<1 gives a power law, closed-form kinds without jumps give zero
  TailFunction levy_tail() const;

  // Second differences on a log grid of q are ≥ −tol·scale
  bool convex_on_grid(double tol) const;

  std::string describe() const;

 private:
  Kind kind_;
};

// Φ(q) = d′ q^β
struct StableImmigration {
  double d_prime = 1.0;
  double beta_idx = 1.0;
};
// Φ(q) = β₀ q
struct LinearImmigration {
  double beta0 = 0.0;
};
// Φ(q) = β₀ q + ∫ (1 − e^{-qz}) ν(dz), ν given by its tail
struct TailImmigration {
  double beta0 = 0.0;
  TailFunction nu_bar;
};

class ImmigrationMechanism {
 public:
  using Kind = std::variant<StableImmigration, LinearImmigration, TailImmigration>;

  ImmigrationMechanism() : ImmigrationMechanism(LinearImmigration{}) {}
  explicit ImmigrationMechanism(Kind kind);

  static ImmigrationMechanism stable(double d_prime, double beta) {
    return ImmigrationMechanism(StableImmigration{d_prime, beta});
  }
  static ImmigrationMechanism linear(double beta0) { return ImmigrationMechanism(LinearImmigration{beta0}); }
  static ImmigrationMechanism tail(double beta0, TailFunction nu) {
    return ImmigrationMechanism(TailImmigration{beta0, std::move(nu)});
  }

  const Kind& kind() const { return kind_; }
  template <class T>
  const T* as() const { return std::get_if<T>(&kind_); }

  double operator()(double q) const;
  // Φ(e^{lq}); used with lq far outside the double range of e^{lq}
  double at_log(double lq) const;
  // Φ^{-1}(y)
  double inverse(double y) const;

  double drift() const;
  TailFunction levy_tail() const;
  // total jump mass ν̄(0+)
  double jump_mass() const;
  bool strictly_positive() const;
  bool is_zero() const;
  bool concave_on_grid(double tol) const;

  std::string describe() const;

 private:
  Kind kind_;
};

enum class CritTag { Subcritical, Critical, Supercritical };

struct Criticality {
  CritTag tag = CritTag::Critical;
  double rho = 0.0;  // largest root of Ψ, possibly +inf
};

enum class Divergence { Finite, Infinite };

const char* to_string(CritTag t);
const char* to_string(Divergence d);

double psi_eval(const BranchingMechanism& psi, double q);
double phi_eval(const ImmigrationMechanism& phi, double q);
Criticality criticality(const BranchingMechanism& psi);
bool greys_condition(const BranchingMechanism& psi);
Divergence divergence_test(const BranchingMechanism& psi, const ImmigrationMechanism& phi);

// Plain description of a CBI model: mechanisms, initial value and chart reference point.
struct Scenario {
  BranchingMechanism psi;
  ImmigrationMechanism phi;
  double x0 = 0.0;
  double lambda0 = std::numeric_limits<double>::quiet_NaN();  // NaN: pick a default
  double rel_tol = 1e-8;
  double abs_tol = 1e-12;
  double s_threshold = 0.05;
  double l_spread = 0.10;
  double f_threshold = 20.0;
};

}  // namespace cbi
