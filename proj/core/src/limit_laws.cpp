#include "cbi/limit_laws.hpp"

#include <cmath>

#include "cbi/error.hpp"
#include "cbi/quadrature.hpp"

namespace cbi {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// E e^{-θZ} = θ ∫_0^∞ e^{-θz} F(z) dz = P(Z ≤ E/θ), in w = ln(θz)
double stieltjes_lt(const LimitLaw& law, double theta) {
  auto f = [&](double w) {
    double e = std::exp(w);
    return std::exp(-e) * e * cdf(law, e / theta);
  };
  const double breaks[] = {0.0};
  return quad::integrate_split(f, -60.0, std::log(60.0), 4.0, breaks, {1e-10, 1e-300}).value;
}

double wlambda_lt(const WLambda& w, double theta) {
  if (!w.model) throw Error(ErrorKind::Domain, "WLambda law needs a model");
  const auto& re = *w.model;
  const auto& fe = re.flow();
  if (fe.crit().tag != CritTag::Supercritical) throw Error(ErrorKind::Domain, "WLambda needs a supercritical mechanism");
  if (!(w.lambda > 0.0 && w.lambda < fe.crit().rho)) throw Error(ErrorKind::Domain, "WLambda needs lambda in (0, rho)");
  if (re.divergence() != Divergence::Finite) throw Error(ErrorKind::Domain, "WLambda needs the convergent case");
  double tau = -std::log(theta) / fe.psi().b();
  double v = tau >= 0.0 ? fe.v_forward(tau, w.lambda) : fe.v_backward(-tau, w.lambda);
  return std::exp(-w.x * v + re.integral_from_zero(v));
}

}  // namespace

std::string law_name(const LimitLaw& law) {
  return std::visit(overloaded{
                        [](const Exp1&) { return std::string("Exp1"); },
                        [](const Uniform01&) { return std::string("Uniform01"); },
                        [](const ULaw&) { return std::string("UL"); },
                        [](const UFLaw&) { return std::string("UF"); },
                        [](const VLLaw&) { return std::string("VL"); },
                        [](const VFLaw&) { return std::string("VF"); },
                        [](const StationaryStable&) { return std::string("StationaryStable"); },
                        [](const WLambda&) { return std::string("WLambda"); },
                    },
                    law);
}

bool has_cdf(const LimitLaw& law) {
  return std::holds_alternative<Exp1>(law) || std::holds_alternative<Uniform01>(law) ||
         std::holds_alternative<ULaw>(law) || std::holds_alternative<UFLaw>(law);
}

double lt(const LimitLaw& law, double theta) {
  if (!(theta >= 0.0)) throw Error(ErrorKind::Domain, "lt needs theta >= 0", {theta});
  if (theta == 0.0) return 1.0;
  return std::visit(
      overloaded{
          [&](const Exp1&) { return 1.0 / (1.0 + theta); },
          [&](const Uniform01&) { return stieltjes_lt(law, theta); },
          [&](const ULaw& u) {
            if (!(u.a > 0.0)) throw Error(ErrorKind::Domain, "UL needs a > 0");
            return stieltjes_lt(law, theta);
          },
          [&](const UFLaw& u) {
            if (!(u.delta > 0.0)) throw Error(ErrorKind::Domain, "UF needs delta > 0");
            return stieltjes_lt(law, theta);
          },
          [&](const VLLaw& v) {
            if (!(v.alpha > 0.0 && v.a > 0.0)) throw Error(ErrorKind::Domain, "VL needs alpha, a > 0");
            return std::pow(1.0 + std::pow(theta, v.alpha), -v.a);
          },
          [&](const VFLaw& v) {
            if (!(v.beta_idx > 0.0)) throw Error(ErrorKind::Domain, "VF needs beta_idx > 0");
            return std::exp(-std::pow(theta, v.beta_idx));
          },
          [&](const StationaryStable& s) {
            double k = s.beta_idx - s.alpha;
            if (!(k > 0.0)) throw Error(ErrorKind::Domain, "StationaryStable needs beta_idx > alpha");
            return std::exp(-std::pow(theta, k) / k);
          },
          [&](const WLambda& w) { return wlambda_lt(w, theta); },
      },
      law);
}

double cdf(const LimitLaw& law, double z) {
  if (std::isnan(z)) throw Error(ErrorKind::Domain, "cdf of NaN");
  if (z <= 0.0) return 0.0;
  if (std::isinf(z)) return 1.0;
  return std::visit(overloaded{
                        [&](const Exp1&) { return -std::expm1(-z); },
                        [&](const Uniform01&) { return std::min(z, 1.0); },
                        [&](const ULaw& u) { return std::pow(z / (1.0 + z), u.a); },
                        [&](const UFLaw& u) { return std::exp(-std::pow(z, -u.delta)); },
                        [&](const auto&) -> double {
                          throw Error(ErrorKind::UnsupportedKind, "law has no closed-form cdf: " + law_name(law));
                        },
                    },
                    law);
}

double finite_t_lt(const RenormEvaluator& re, double x, double t, double lam) {
  if (x < 0.0 || t < 0.0 || lam < 0.0) throw Error(ErrorKind::Domain, "finite_t_lt needs nonnegative arguments");
  double v = x > 0.0 ? re.flow().v_forward(t, lam) : 0.0;
  return std::exp(-x * v - re.r_eval(t, lam));
}

double finite_t_lt(const BranchingMechanism& psi, const ImmigrationMechanism& phi, double x, double t, double lam) {
  return finite_t_lt(RenormEvaluator(psi, phi), x, t, lam);
}

}  // namespace cbi
