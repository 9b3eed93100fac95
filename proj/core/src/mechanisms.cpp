#include "cbi/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "cbi/error.hpp"
#include "cbi/quadrature.hpp"

namespace cbi {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const char* msg) {
  if (!ok) throw Error(ErrorKind::InvalidArgument, msg);
}

// ∫_0^∞ (1 − e^{-qu}) π̄(u) du in s = ln u
double pi_integral(const TailFunction& pi, double q) {
  if (pi.kind() == TailFunction::Kind::Zero || q == 0.0) return 0.0;
  if (pi.kind() == TailFunction::Kind::PowerLaw) {
    double g = pi.rate();
    return pi.c() * std::tgamma(2.0 - g) / (g - 1.0) * std::pow(q, g - 1.0);
  }
  if (pi.kind() == TailFunction::Kind::Exponential) return pi.c() * q / (pi.rate() * (pi.rate() + q));
  if (pi.kind() == TailFunction::Kind::Table) {
    // atom m at x contributes m (x − (1 − e^{-qx})/q)
    const auto& p = pi.points();
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      double m = p[i].second - (i + 1 < p.size() ? p[i + 1].second : 0.0);
      double x = p[i].first, z = q * x;
      s += m * (z < 1e-4 ? x * z * (0.5 - z / 6.0 + z * z / 24.0) : x + std::expm1(-z) / q);
    }
    return s;
  }
  // remaining kinds have bounded or logarithmic tails
  double s_hi = pi.log_support_end();
  if (!std::isfinite(s_hi)) s_hi = 800.0;
  double lq = std::log(q);
  double s_lo = std::min(-lq, s_hi) - 20.0;
  auto f = [&](double s) {
    double u = std::exp(s);
    return -std::expm1(-q * u) * pi.at_log(s) * u;
  };
  std::vector<double> br = pi.log_breaks();
  br.push_back(-lq);
  return quad::integrate_split(f, s_lo, s_hi, 3.0, br, {1e-11, 1e-15}).value;
}

// Φ(e^{lq}) − β₀e^{lq} = E[ν̄(E/q)], integrated over w = ln E
double nu_integral(const TailFunction& nu, double lq) {
  if (nu.kind() == TailFunction::Kind::Zero) return 0.0;
  if (nu.kind() == TailFunction::Kind::Table) {
    // atoms: Σ m_i (1 − e^{-q x_i})
    double q = std::exp(lq);
    const auto& p = nu.points();
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      double next = i + 1 < p.size() ? p[i + 1].second : 0.0;
      s += (p[i].second - next) * -std::expm1(-q * p[i].first);
    }
    return s;
  }
  if (nu.kind() == TailFunction::Kind::PowerLaw)
    return nu.c() * std::tgamma(1.0 - nu.rate()) * std::exp(nu.rate() * lq);
  double w_hi = std::log(50.0);
  double send = nu.log_support_end();
  if (std::isfinite(send)) w_hi = std::min(w_hi, send + lq);
  double w_lo = -45.0;
  if (w_hi <= w_lo) return 0.0;
  auto f = [&](double w) {
    double e = std::exp(w);
    return std::exp(-e) * e * nu.at_log(w - lq);
  };
  std::vector<double> br{0.0};
  for (double s : nu.log_breaks()) br.push_back(s + lq);
  return quad::integrate_split(f, w_lo, w_hi, 6.0, br, {1e-10, 1e-15}).value;
}

}  // namespace

const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::QuadratureFailure: return "quadrature-failure";
    case ErrorKind::InconclusiveQuadrature: return "inconclusive-quadrature";
    case ErrorKind::RootBracketFailure: return "root-bracket-failure";
    case ErrorKind::IntegrationFailure: return "integration-failure";
    case ErrorKind::BisectionFailure: return "bisection-failure";
    case ErrorKind::SingularRoot: return "singular-root";
    case ErrorKind::Unclassified: return "unclassified";
    case ErrorKind::UnsupportedKind: return "unsupported-kind";
    case ErrorKind::SchemeMismatch: return "scheme-mismatch";
    case ErrorKind::StepInstability: return "step-instability";
    case ErrorKind::InfiniteActivity: return "infinite-activity";
    case ErrorKind::EmptyEnsemble: return "empty-ensemble";
    case ErrorKind::HypothesisMismatch: return "hypothesis-mismatch";
  }
  return "unknown";
}

const char* to_string(CritTag t) {
  switch (t) {
    case CritTag::Subcritical: return "subcritical";
    case CritTag::Critical: return "critical";
    case CritTag::Supercritical: return "supercritical";
  }
  return "";
}

const char* to_string(Divergence d) { return d == Divergence::Finite ? "finite" : "infinite"; }

// ---------------------------------------------------------------- branching

BranchingMechanism::BranchingMechanism(Kind kind) : kind_(std::move(kind)) {
  std::visit(overloaded{
                 [](const StableBranching& k) {
                   require(k.d > 0.0 && std::isfinite(k.d), "stable branching needs d > 0");
                   require(k.alpha > 0.0 && k.alpha <= 1.0, "stable branching needs alpha in (0,1]");
                 },
                 [](const QuadraticBranching& k) {
                   require(std::isfinite(k.b), "quadratic branching needs finite b");
                   require(k.sigma >= 0.0 && std::isfinite(k.sigma), "sigma must be >= 0");
                 },
                 [](const LogisticBranching&) {},
                 [](const GeneralBranching& k) {
                   require(std::isfinite(k.b), "general branching needs finite b");
                   require(k.sigma >= 0.0 && std::isfinite(k.sigma), "sigma must be >= 0");
                   require(k.pi_tail.first_moment_finite(),
                           "general branching needs a branching measure with finite mean");
                 },
             },
             kind_);
}

double BranchingMechanism::b() const {
  return std::visit(overloaded{
                        [](const StableBranching&) { return 0.0; },
                        [](const QuadraticBranching& k) { return k.b; },
                        [](const LogisticBranching&) { return -1.0; },
                        [](const GeneralBranching& k) { return k.b; },
                    },
                    kind_);
}

double BranchingMechanism::sigma() const {
  return std::visit(overloaded{
                        [](const StableBranching& k) { return k.alpha == 1.0 ? std::sqrt(2.0 * k.d) : 0.0; },
                        [](const QuadraticBranching& k) { return k.sigma; },
                        [](const LogisticBranching&) { return std::sqrt(2.0); },
                        [](const GeneralBranching& k) { return k.sigma; },
                    },
                    kind_);
}

bool BranchingMechanism::is_zero() const {
  if (auto* q = as<QuadraticBranching>()) return q->b == 0.0 && q->sigma == 0.0;
  if (auto* g = as<GeneralBranching>())
    return g->b == 0.0 && g->sigma == 0.0 && g->pi_tail.kind() == TailFunction::Kind::Zero;
  return false;
}

double BranchingMechanism::over_q(double q) const {
  return std::visit(overloaded{
                        [q](const StableBranching& k) { return k.d * std::pow(q, k.alpha); },
                        [q](const QuadraticBranching& k) { return k.b + 0.5 * k.sigma * k.sigma * q; },
                        [q](const LogisticBranching&) { return q - 1.0; },
                        [q](const GeneralBranching& k) {
                          return k.b + 0.5 * k.sigma * k.sigma * q + pi_integral(k.pi_tail, q);
                        },
                    },
                    kind_);
}

double BranchingMechanism::operator()(double q) const {
  if (q == 0.0) return 0.0;
  if (auto* s = as<StableBranching>()) return s->d * std::pow(q, 1.0 + s->alpha);
  if (as<LogisticBranching>()) return q * q - q;
  return q * over_q(q);
}

double BranchingMechanism::derivative(double q) const {
  if (auto* s = as<StableBranching>()) return s->d * (1.0 + s->alpha) * std::pow(q, s->alpha);
  if (auto* k = as<QuadraticBranching>()) return k->b + k->sigma * k->sigma * q;
  if (as<LogisticBranching>()) return 2.0 * q - 1.0;
  double h = 1e-5 * std::max(q, 1e-3);
  if (q < h) return ((*this)(q + h) - (*this)(q)) / h;
  return ((*this)(q + h) - (*this)(q - h)) / (2.0 * h);
}

TailFunction BranchingMechanism::levy_tail() const {
  if (auto* s = as<StableBranching>()) {
    if (s->alpha == 1.0) return TailFunction::zero();
    // π(dz) = c z^{-2-α} dz with c = d / Γ(−1−α)
    double c = s->d / std::tgamma(-1.0 - s->alpha);
    return TailFunction::power_law(c / (1.0 + s->alpha), 1.0 + s->alpha);
  }
  if (auto* g = as<GeneralBranching>()) return g->pi_tail;
  return TailFunction::zero();
}

bool BranchingMechanism::convex_on_grid(double tol) const {
  std::vector<double> q;
  for (double e = -6.0; e <= 4.0; e += 0.25) q.push_back(std::pow(10.0, e));
  for (std::size_t i = 1; i + 1 < q.size(); ++i) {
    double h1 = q[i] - q[i - 1], h2 = q[i + 1] - q[i];
    double d1 = ((*this)(q[i]) - (*this)(q[i - 1])) / h1;
    double d2 = ((*this)(q[i + 1]) - (*this)(q[i])) / h2;
    double scale = std::max({std::abs(d1), std::abs(d2), 1e-300});
    if (d2 - d1 < -tol * scale) return false;
  }
  return true;
}

std::string BranchingMechanism::describe() const {
  std::ostringstream os;
  os.precision(12);
  std::visit(overloaded{
                 [&](const StableBranching& k) { os << "stable(d=" << k.d << ", alpha=" << k.alpha << ")"; },
                 [&](const QuadraticBranching& k) { os << "quadratic(b=" << k.b << ", sigma=" << k.sigma << ")"; },
                 [&](const LogisticBranching&) { os << "logistic"; },
                 [&](const GeneralBranching& k) {
                   os << "general(b=" << k.b << ", sigma=" << k.sigma << ", pi=" << k.pi_tail.name() << ")";
                 },
             },
             kind_);
  return os.str();
}

// -------------------------------------------------------------- immigration

ImmigrationMechanism::ImmigrationMechanism(Kind kind) : kind_(std::move(kind)) {
  std::visit(overloaded{
                 [](const StableImmigration& k) {
                   require(k.d_prime > 0.0 && std::isfinite(k.d_prime), "stable immigration needs d_prime > 0");
                   require(k.beta_idx > 0.0 && k.beta_idx <= 1.0, "stable immigration needs beta_idx in (0,1]");
                 },
                 [](const LinearImmigration& k) {
                   require(k.beta0 >= 0.0 && std::isfinite(k.beta0), "beta0 must be >= 0");
                 },
                 [](const TailImmigration& k) {
                   require(k.beta0 >= 0.0 && std::isfinite(k.beta0), "beta0 must be >= 0");
                   require(std::isfinite(k.nu_bar.mass()) || k.nu_bar.kind() == TailFunction::Kind::PowerLaw,
                           "immigration tail must be integrable near 0");
                   if (k.nu_bar.kind() == TailFunction::Kind::PowerLaw)
                     require(k.nu_bar.rate() < 1.0, "power-law immigration tail needs index < 1");
                 },
             },
             kind_);
}

double ImmigrationMechanism::at_log(double lq) const {
  return std::visit(overloaded{
                        [lq](const StableImmigration& k) { return k.d_prime * std::exp(k.beta_idx * lq); },
                        [lq](const LinearImmigration& k) { return k.beta0 * std::exp(lq); },
                        [lq](const TailImmigration& k) {
                          double drift = k.beta0 > 0.0 ? k.beta0 * std::exp(lq) : 0.0;
                          return drift + nu_integral(k.nu_bar, lq);
                        },
                    },
                    kind_);
}

double ImmigrationMechanism::operator()(double q) const {
  if (q == 0.0) return 0.0;
  if (std::isinf(q)) {
    if (as<TailImmigration>() && drift() == 0.0) return jump_mass();
    return inf;
  }
  if (auto* s = as<StableImmigration>()) return s->d_prime * std::pow(q, s->beta_idx);
  if (auto* l = as<LinearImmigration>()) return l->beta0 * q;
  return at_log(std::log(q));
}

double ImmigrationMechanism::inverse(double y) const {
  if (y < 0.0) throw Error(ErrorKind::Domain, "Phi inverse needs y >= 0");
  if (y == 0.0) return 0.0;
  if (auto* s = as<StableImmigration>()) return std::pow(y / s->d_prime, 1.0 / s->beta_idx);
  if (auto* l = as<LinearImmigration>()) {
    if (l->beta0 == 0.0) throw Error(ErrorKind::Domain, "Phi is identically zero");
    return y / l->beta0;
  }
  if (drift() == 0.0 && y >= jump_mass()) throw Error(ErrorKind::Domain, "Phi inverse: value beyond Phi(inf)");
  double lo = -50.0, hi = 5.0;
  while (at_log(lo) > y) lo *= 2.0;
  while (at_log(hi) < y) hi += 10.0;
  boost::uintmax_t it = 200;
  auto r = boost::math::tools::toms748_solve([&](double m) { return at_log(m) - y; }, lo, hi,
                                             boost::math::tools::eps_tolerance<double>(50), it);
  return std::exp(0.5 * (r.first + r.second));
}

double ImmigrationMechanism::drift() const {
  if (auto* s = as<StableImmigration>()) return s->beta_idx == 1.0 ? s->d_prime : 0.0;
  if (auto* l = as<LinearImmigration>()) return l->beta0;
  return std::get<TailImmigration>(kind_).beta0;
}

TailFunction ImmigrationMechanism::levy_tail() const {
  if (auto* s = as<StableImmigration>()) {
    if (s->beta_idx == 1.0) return TailFunction::zero();
    return TailFunction::power_law(s->d_prime / std::tgamma(1.0 - s->beta_idx), s->beta_idx);
  }
  if (auto* t = as<TailImmigration>()) return t->nu_bar;
  return TailFunction::zero();
}

double ImmigrationMechanism::jump_mass() const { return levy_tail().mass(); }

bool ImmigrationMechanism::strictly_positive() const { return drift() > 0.0 || jump_mass() > 0.0; }

bool ImmigrationMechanism::is_zero() const { return !strictly_positive(); }

bool ImmigrationMechanism::concave_on_grid(double tol) const {
  std::vector<double> q;
  for (double e = -6.0; e <= 4.0; e += 0.25) q.push_back(std::pow(10.0, e));
  for (std::size_t i = 1; i + 1 < q.size(); ++i) {
    double d1 = ((*this)(q[i]) - (*this)(q[i - 1])) / (q[i] - q[i - 1]);
    double d2 = ((*this)(q[i + 1]) - (*this)(q[i])) / (q[i + 1] - q[i]);
    double scale = std::max({std::abs(d1), std::abs(d2), 1e-300});
    if (d1 < -tol * scale || d2 < -tol * scale) return false;
    if (d2 - d1 > tol * scale) return false;
  }
  return true;
}

std::string ImmigrationMechanism::describe() const {
  std::ostringstream os;
  os.precision(12);
  std::visit(overloaded{
                 [&](const StableImmigration& k) {
                   os << "stable(d_prime=" << k.d_prime << ", beta_idx=" << k.beta_idx << ")";
                 },
                 [&](const LinearImmigration& k) { os << "linear(beta0=" << k.beta0 << ")"; },
                 [&](const TailImmigration& k) { os << "tail(beta0=" << k.beta0 << ", nu=" << k.nu_bar.name() << ")"; },
             },
             kind_);
  return os.str();
}

// --------------------------------------------------------------- operations

double psi_eval(const BranchingMechanism& psi, double q) {
  if (!(q >= 0.0)) throw Error(ErrorKind::Domain, "psi_eval needs q >= 0");
  return psi(q);
}

double phi_eval(const ImmigrationMechanism& phi, double q) {
  if (!(q >= 0.0)) throw Error(ErrorKind::Domain, "phi_eval needs q >= 0");
  return phi(q);
}

Criticality criticality(const BranchingMechanism& psi) {
  double b = psi.b();
  if (b > 0.0) return {CritTag::Subcritical, 0.0};
  if (b == 0.0) return {CritTag::Critical, 0.0};
  if (psi.as<LogisticBranching>()) return {CritTag::Supercritical, 1.0};
  if (auto* k = psi.as<QuadraticBranching>()) {
    if (k->sigma == 0.0) return {CritTag::Supercritical, inf};
    return {CritTag::Supercritical, -2.0 * k->b / (k->sigma * k->sigma)};
  }
  // General: bracket the sign change of Ψ(q)/q on [1e-10, 1e6], then bisect.
  const auto& g = std::get<GeneralBranching>(psi.kind());
  double lo = 1e-10;
  double prev = psi.over_q(lo);
  for (double e = -9.75; e <= 6.0 + 1e-12; e += 0.25) {
    double q = std::pow(10.0, e);
    double v = psi.over_q(q);
    if (v > 0.0 && prev <= 0.0) {
      double a = lo, c = q;
      for (int i = 0; i < 200; ++i) {
        double m = 0.5 * (a + c);
        (psi.over_q(m) > 0.0 ? c : a) = m;
      }
      return {CritTag::Supercritical, 0.5 * (a + c)};
    }
    lo = q;
    prev = v;
  }
  // −Ψ is a subordinator exponent iff there is no Gaussian part and b + ∫ z π(dz) ≤ 0
  if (g.sigma == 0.0 && g.b + g.pi_tail.moment1_above(0.0) <= 0.0) return {CritTag::Supercritical, inf};
  throw Error(ErrorKind::RootBracketFailure, "no sign change of Psi on [1e-10, 1e6]", {prev});
}

bool greys_condition(const BranchingMechanism& psi) {
  if (psi.as<StableBranching>() || psi.as<LogisticBranching>()) return true;
  if (auto* k = psi.as<QuadraticBranching>()) return k->sigma > 0.0;
  Criticality c = criticality(psi);
  if (std::isinf(c.rho)) return false;
  double q0 = std::max(1.0, 2.0 * c.rho);
  std::vector<double> dec;
  for (int k = 0; k < 14; ++k) {
    double a = q0 * std::pow(10.0, k), b = 10.0 * a;
    dec.push_back(quad::integrate_geometric([&](double q) { return 1.0 / psi(q); }, a, b, {1e-9, 1e-300}, 4.0).value);
  }
  double r1 = dec[7] / dec[6];
  double r2 = dec[13] / dec[12];
  if (r1 < 0.8 && r2 < 0.8) return true;
  if (r1 > 0.95 && r2 > 0.95) return false;
  throw Error(ErrorKind::InconclusiveQuadrature, "Grey's condition: tail extrapolation disagrees", dec);
}

Divergence divergence_test(const BranchingMechanism& psi, const ImmigrationMechanism& phi) {
  if (psi.is_zero()) throw Error(ErrorKind::Domain, "divergence_test needs Psi not identically zero");
  auto* ps = psi.as<StableBranching>();
  auto* fs = phi.as<StableImmigration>();
  if (ps && fs) return fs->beta_idx > ps->alpha ? Divergence::Finite : Divergence::Infinite;
  if (psi.b() != 0.0) {
    // equivalent to ∫_1^∞ ν̄(u)/u du < ∞
    if (auto* t = phi.as<TailImmigration>())
      return t->nu_bar.log_moment_finite() ? Divergence::Finite : Divergence::Infinite;
    return Divergence::Finite;
  }
  // critical, not both stable: triple-decade partial integrals toward 0
  auto f = [&](double u) { return phi(u) / std::abs(psi(u)); };
  std::vector<double> c;
  for (int k = 4; k <= 8; ++k) {
    double hi = std::pow(10.0, -k), lo = hi * 1e-3;
    c.push_back(quad::integrate_geometric(f, lo, hi, {1e-9, 1e-300}, 2.0).value);
  }
  bool grows = true;
  for (std::size_t i = 1; i < c.size(); ++i)
    if (!(c[i] >= 0.5 * c[i - 1])) grows = false;
  if (grows) return Divergence::Infinite;
  double r = c.back() / c[c.size() - 2];
  double tail = r < 1.0 ? c.back() * r / (1.0 - r) : inf;
  if (tail < 10.0 * c.back()) return Divergence::Finite;
  throw Error(ErrorKind::InconclusiveQuadrature, "divergence test inconclusive", c);
}

}  // namespace cbi
