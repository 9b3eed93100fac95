#include "cbi/renorm.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/roots.hpp>

#include "cbi/error.hpp"
#include "cbi/quadrature.hpp"

namespace cbi {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();
constexpr double rho_band = 1e-3;  // half-width, in ln λ, of the neighbourhood of ρ

template <class F>
double solve_increasing(F f, double lo, double hi) {
  boost::uintmax_t it = 300;
  auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(48), it);
  return 0.5 * (r.first + r.second);
}

}  // namespace

const char* to_string(Regime r) {
  switch (r) {
    case Regime::Convergent: return "Convergent";
    case Regime::S: return "S";
    case Regime::L: return "L";
    case Regime::F: return "F";
  }
  return "";
}

const char* to_string(Transience t) {
  switch (t) {
    case Transience::Recurrent: return "Recurrent";
    case Transience::Transient: return "Transient";
    case Transience::Inconclusive: return "Inconclusive";
  }
  return "";
}

RenormEvaluator::RenormEvaluator(BranchingMechanism psi, ImmigrationMechanism phi, double lambda0, quad::Options opt,
                                 RegimeThresholds thr)
    : flow_(std::move(psi), lambda0, opt), phi_(std::move(phi)), opt_(opt), thr_(thr) {
  auto* ps = flow_.psi().as<StableBranching>();
  auto* fs = phi_.as<StableImmigration>();
  stable_pair_equal_ = ps && fs && ps->alpha == fs->beta_idx;
}

RenormEvaluator::RenormEvaluator(const Scenario& sc)
    : RenormEvaluator(sc.psi, sc.phi, sc.lambda0, {sc.rel_tol, sc.abs_tol},
                      {sc.s_threshold, sc.l_spread, sc.f_threshold}) {}

Divergence RenormEvaluator::divergence() const { return divergence_test(psi(), phi_); }

double RenormEvaluator::log_integral(double ya, double yb) const {
  if (ya == yb) return 0.0;
  double rho = flow_.crit().rho;
  if (rho > 0.0 && std::isfinite(rho)) {
    double lr = std::log(rho);
    if (std::min(ya, yb) <= lr && lr <= std::max(ya, yb))
      throw Error(ErrorKind::SingularRoot, "integration path meets the root of Psi", {ya, yb, lr});
  }
  auto f = [this](double y) { return phi_.at_log(y) / psi().over_q(std::exp(y)); };
  return quad::integrate_split(f, ya, yb, 2.0, {}, opt_).value;
}

double RenormEvaluator::integral_from_zero(double u) const {
  if (u == 0.0) return 0.0;
  double top = std::log(u);
  auto f = [this](double y) { return phi_.at_log(y) / psi().over_q(std::exp(y)); };
  double total = 0.0;
  int quiet = 0;
  for (int k = 0; k < 2000; ++k) {
    double hi = top - 2.0 * k, lo = hi - 2.0;
    double part = quad::integrate(f, lo, hi, opt_).value;
    total += part;
    if (std::abs(part) <= 1e-15 * std::abs(total)) {
      if (++quiet >= 3) return total;
    } else {
      quiet = 0;
    }
  }
  throw Error(ErrorKind::Domain, "integral of Phi/Psi at 0 does not converge", {total});
}

double RenormEvaluator::time_integral(double T, double ls) const {
  if (T <= 0.0) return 0.0;
  auto f = [&](double s) { return phi_.at_log(flow_.log_v_forward(s, ls)); };
  return quad::integrate_split(f, 0.0, T, std::max(2.0, T / 64.0), {}, opt_).value;
}

double RenormEvaluator::r_eval(double t, double lam) const {
  if (t < 0.0 || lam < 0.0) throw Error(ErrorKind::Domain, "r_eval needs t, lam >= 0", {t, lam});
  if (lam == 0.0 || t == 0.0) return 0.0;
  if (std::isinf(lam)) return r_infinity(t);
  return r_eval_log(t, std::log(lam));
}

double RenormEvaluator::r_eval_log(double t, double ll) const {
  if (t == 0.0 || ll == -inf) return 0.0;
  if (ll == inf) return r_infinity(t);
  if (psi().is_zero()) return t * phi_.at_log(ll);
  if (stable_pair_equal_) {
    const auto& s = *psi().as<StableBranching>();
    const auto& f = *phi_.as<StableImmigration>();
    return f.d_prime / (s.alpha * s.d) * std::log1p(s.alpha * s.d * t * std::exp(s.alpha * ll));
  }
  double rho = flow_.crit().rho;
  if (rho > 0.0 && std::isfinite(rho)) {
    double lr = std::log(rho);
    if (std::abs(ll - lr) <= rho_band) return time_integral(t, ll);
    double lv = flow_.log_v_forward(t, ll);
    if (std::abs(lv - lr) <= rho_band) {
      // integrate in space up to the band edge, then in time inside the band
      double lp = lr + (ll > lr ? rho_band : -rho_band);
      double t1 = quad::integrate_split([this](double y) { return 1.0 / psi().over_q(std::exp(y)); }, lp, ll, 2.0,
                                        {}, opt_).value;
      return log_integral(lp, ll) + time_integral(t - std::abs(t1), lp);
    }
    return std::max(0.0, log_integral(lv, ll));
  }
  double lv = flow_.log_v_forward(t, ll);
  return std::max(0.0, log_integral(lv, ll));
}

double RenormEvaluator::r_infinity(double t) const {
  if (t == 0.0) return 0.0;
  if (!psi().is_zero() && greys_condition(psi())) return r_eval(t, FlowEvaluator::lambda_big);
  double top = phi_(inf);
  return std::isinf(top) ? inf : t * top;
}

double RenormEvaluator::c_eval(double t, double target) const {
  if (!(t > 0.0) || !(target > 0.0)) throw Error(ErrorKind::Domain, "c_eval needs t > 0 and target > 0", {t, target});
  if (psi().is_zero()) {
    double cap = phi_(inf) * t;
    if (!(target < cap)) throw Error(ErrorKind::Domain, "c_eval: target beyond r_t(inf)", {target, cap});
    return phi_.inverse(target / t);
  }
  if (stable_pair_equal_) {
    const auto& s = *psi().as<StableBranching>();
    const auto& f = *phi_.as<StableImmigration>();
    double k = s.alpha * s.d;
    return std::pow(std::expm1(target * k / f.d_prime) / (k * t), 1.0 / s.alpha);
  }
  double hi = std::log(FlowEvaluator::lambda_big);
  double cap = r_eval_log(t, hi);
  if (!(target < cap)) throw Error(ErrorKind::Domain, "c_eval: target beyond the r_t(inf) estimate", {target, cap});
  auto f = [&](double m) { return r_eval_log(t, m) - target; };
  double lo = hi - 10.0;
  while (f(lo) > 0.0) {
    hi = lo;
    lo -= 2.0 * (hi - lo + 5.0);
    if (lo < -1e6) throw Error(ErrorKind::BisectionFailure, "c_eval: no lower bracket", {target});
  }
  return std::exp(solve_increasing(f, lo, hi));
}

double RenormEvaluator::H_prime(double x) const {
  if (!(x >= 0.0)) throw Error(ErrorKind::Domain, "H_prime needs x >= 0");
  double b = psi().b();
  if (b != 0.0) return phi_.at_log(-x) / std::abs(b);
  return phi_(flow_.g_inv(x));
}

double RenormEvaluator::H_eval(double x) const {
  if (!(x >= 0.0)) throw Error(ErrorKind::Domain, "H_eval needs x >= 0");
  if (x == 0.0) return 0.0;
  auto f = [this](double y) { return H_prime(y); };
  double head = quad::integrate(f, 0.0, std::min(x, 1.0), opt_).value;
  if (x <= 1.0) return head;
  return head + quad::integrate_geometric(f, 1.0, x, opt_, 2.0).value;
}

RegimeReport RenormEvaluator::classify_regime() const {
  RegimeReport rep;
  rep.thresholds = thr_;
  if (divergence() == Divergence::Finite) {
    rep.regime = Regime::Convergent;
    return rep;
  }
  std::vector<double> xs, s, hp;
  for (int k = 2; k <= 10; ++k) {
    double x = std::pow(10.0, k);
    double h = H_prime(x);
    xs.push_back(x);
    hp.push_back(h);
    s.push_back(x * h);
    rep.trace.emplace_back(x, x * h);
  }
  std::size_t n = s.size();
  std::vector<double> top(s.end() - 3, s.end());
  std::vector<double> sorted = top;
  std::sort(sorted.begin(), sorted.end());
  double med = sorted[1];
  if (med > 0.0 && (sorted[2] - sorted[0]) / med < thr_.l_spread) {
    rep.regime = Regime::L;
    rep.a = med;
    return rep;
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < n; ++i)
    if (!(s[i] < s[i - 1])) decreasing = false;
  if (decreasing && s.back() < thr_.s_threshold) {
    rep.regime = Regime::S;
    return rep;
  }
  if (s.back() > thr_.f_threshold && s[n - 1] > s[n - 2] && s[n - 2] > s[n - 3]) {
    // least-squares slope of ln H′ against ln x over the top three decades
    double mx = 0, my = 0;
    for (std::size_t i = n - 3; i < n; ++i) {
      mx += std::log(xs[i]) / 3.0;
      my += std::log(hp[i]) / 3.0;
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = n - 3; i < n; ++i) {
      double dx = std::log(xs[i]) - mx;
      sxy += dx * (std::log(hp[i]) - my);
      sxx += dx * dx;
    }
    rep.regime = Regime::F;
    rep.delta = std::clamp(-sxy / sxx, 0.0, 1.0);
    return rep;
  }
  std::vector<double> tr;
  for (auto& p : rep.trace) {
    tr.push_back(p.first);
    tr.push_back(p.second);
  }
  throw Error(ErrorKind::Unclassified, "x H'(x) matches none of the S/L/F patterns", tr);
}

double RenormEvaluator::h_inverse(double y) const {
  double y0 = 1.0 / H_prime(0.0);
  if (!(y > y0)) throw Error(ErrorKind::Domain, "h_inverse needs y above 1/H'(0)", {y, y0});
  auto f = [&](double x) { return -std::log(H_prime(x)) - std::log(y); };
  double hi = 1.0;
  while (f(hi) < 0.0) {
    hi *= 2.0;
    if (hi > 1e300) throw Error(ErrorKind::BisectionFailure, "h_inverse: no upper bracket", {y});
  }
  return solve_increasing(f, 0.0, hi);
}

double RenormEvaluator::log_m(double log_x) const { return log_integral(-log_x, 0.0); }

double RenormEvaluator::m_eval(double x) const {
  if (!(x > 0.0)) throw Error(ErrorKind::Domain, "m_eval needs x > 0");
  return std::exp(log_m(std::log(x)));
}

TransienceReport RenormEvaluator::transience_test() const {
  if (psi().b() < 0.0) throw Error(ErrorKind::HypothesisMismatch, "transience test needs b >= 0");
  TransienceReport rep;
  Transience shortcut = Transience::Inconclusive;
  try {
    rep.regime = classify_regime();
    rep.has_regime = true;
    switch (rep.regime.regime) {
      case Regime::Convergent:
      case Regime::S: shortcut = Transience::Recurrent; break;
      case Regime::F: shortcut = Transience::Transient; break;
      case Regime::L: shortcut = rep.regime.a > 1.0 ? Transience::Transient : Transience::Recurrent; break;
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Unclassified) throw;
  }

  // H on a log grid (16 nodes per decade) with cubic Hermite interpolation, then ∫ e^{-H} per decade.
  const int per = 16, decades = 10;
  std::vector<double> lx, H, dH;
  double acc = H_eval(1.0);
  for (int i = 0; i <= per * decades; ++i) {
    double l = std::log(10.0) * i / per;
    if (i > 0) {
      double a = std::exp(lx.back()), b = std::exp(l);
      acc += quad::integrate([this](double x) { return H_prime(x); }, a, b, opt_).value;
    }
    lx.push_back(l);
    H.push_back(acc);
    dH.push_back(H_prime(std::exp(l)) * std::exp(l));  // dH/d ln x
  }
  double hstep = std::log(10.0) / per;
  auto Hi = [&](double l) {
    int i = std::clamp(static_cast<int>(std::floor(l / hstep)), 0, per * decades - 1);
    double s = (l - lx[i]) / hstep, s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * H[i] + (s3 - 2 * s2 + s) * hstep * dH[i] + (-2 * s3 + 3 * s2) * H[i + 1] +
           (s3 - s2) * hstep * dH[i + 1];
  };
  for (int k = 0; k < decades; ++k) {
    auto f = [&](double l) { return std::exp(l - Hi(l)); };
    double a = std::log(10.0) * k, b = std::log(10.0) * (k + 1);
    rep.decade_integrals.push_back(quad::integrate_split(f, a, b, hstep, {}, {1e-10, 1e-300}).value);
  }
  const auto& d = rep.decade_integrals;
  double logsum = 0.0;
  for (int k = decades - 3; k < decades; ++k) {
    double r = d[k - 1] > 0.0 ? d[k] / d[k - 1] : 0.0;
    logsum += std::log(std::max(r, 1e-300));
  }
  rep.tail_ratio = std::exp(logsum / 3.0);
  Transience quadv = Transience::Inconclusive;
  if (rep.tail_ratio < 0.9) quadv = Transience::Transient;
  if (rep.tail_ratio > 0.97) quadv = Transience::Recurrent;

  if (quadv == Transience::Inconclusive) {
    rep.verdict = Transience::Inconclusive;
  } else if (shortcut == Transience::Inconclusive || shortcut == quadv) {
    rep.verdict = quadv;
  } else {
    rep.verdict = Transience::Inconclusive;
  }
  return rep;
}

}  // namespace cbi
