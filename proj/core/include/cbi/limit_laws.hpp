#pragma once

#include <memory>
#include <string>
#include <variant>

#include "cbi/renorm.hpp"

namespace cbi {

struct Exp1 {};
struct Uniform01 {};
struct ULaw {
  double a = 1.0;
};
struct UFLaw {
  double delta = 1.0;
};
struct VLLaw {
  double alpha = 1.0;
  double a = 1.0;
};
struct VFLaw {
  double beta_idx = 1.0;
};
struct StationaryStable {
  double alpha = 0.5;
  double beta_idx = 1.0;
};
// Limit of v_{-t}(λ)Y_t in the supercritical convergent case
struct WLambda {
  double x = 0.0;
  double lambda = 0.5;
  std::shared_ptr<const RenormEvaluator> model;
};

using LimitLaw = std::variant<Exp1, Uniform01, ULaw, UFLaw, VLLaw, VFLaw, StationaryStable, WLambda>;

std::string law_name(const LimitLaw& law);
bool has_cdf(const LimitLaw& law);

double lt(const LimitLaw& law, double theta);
double cdf(const LimitLaw& law, double z);

// exp(−x v_t(λ) − r_t(λ))
double finite_t_lt(const RenormEvaluator& re, double x, double t, double lam);
double finite_t_lt(const BranchingMechanism& psi, const ImmigrationMechanism& phi, double x, double t, double lam);

}  // namespace cbi
