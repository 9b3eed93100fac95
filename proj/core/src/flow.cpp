#include "cbi/flow.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include "cbi/error.hpp"

namespace cbi {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double logaddexp(double a, double b) {
  if (a == -inf) return b;
  if (b == -inf) return a;
  double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// root of f on [lo, hi] where f changes sign
template <class F>
double solve(F f, double lo, double hi) {
  boost::uintmax_t it = 300;
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) throw Error(ErrorKind::BisectionFailure, "no sign change in bracket", {lo, hi, flo, fhi});
  auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(52), it);
  return 0.5 * (r.first + r.second);
}

}  // namespace

FlowEvaluator::FlowEvaluator(BranchingMechanism psi, double lambda0, quad::Options opt)
    : psi_(std::move(psi)), crit_(criticality(psi_)), lambda0_(lambda0), opt_(opt) {
  zero_ = psi_.is_zero();
  if (std::isnan(lambda0_)) {
    lambda0_ = (crit_.tag == CritTag::Supercritical && std::isfinite(crit_.rho)) ? 0.5 * crit_.rho : 1.0;
  }
  if (!(lambda0_ > 0.0) || !std::isfinite(lambda0_)) throw Error(ErrorKind::Domain, "lambda0 must be positive and finite");
  if (crit_.tag == CritTag::Supercritical && !(lambda0_ < crit_.rho))
    throw Error(ErrorKind::Domain, "lambda0 must lie below rho in the supercritical case", {lambda0_, crit_.rho});

  if (psi_.as<StableBranching>()) closed_ = Closed::Stable;
  if (psi_.as<LogisticBranching>()) closed_ = Closed::Logistic;
  greys_ = !zero_ && greys_condition(psi_);
  if (zero_ || closed_ != Closed::None) return;

  // φ table on a log grid, cumulated downward from λ₀; exact slopes dφ/dy = −1/|Ψ(e^y)/e^y|
  y0_ = std::log(table_floor);
  h_ = (std::log(lambda0_) - y0_) / (table_nodes - 1);
  phi_tab_.assign(table_nodes, 0.0);
  dphi_tab_.assign(table_nodes, 0.0);
  auto inv = [this](double y) { return 1.0 / std::abs(psi_.over_q(std::exp(y))); };
  for (int i = 0; i < table_nodes; ++i) dphi_tab_[i] = -inv(y0_ + i * h_);
  for (int i = table_nodes - 2; i >= 0; --i) {
    double a = y0_ + i * h_;
    phi_tab_[i] = phi_tab_[i + 1] + quad::integrate(inv, a, a + h_, {1e-12, 1e-300}).value;
  }
}

double FlowEvaluator::varphi_below_table(double y) const {
  auto inv = [this](double s) { return 1.0 / std::abs(psi_.over_q(std::exp(s))); };
  return phi_tab_.front() + quad::integrate_split(inv, y, y0_, 5.0, {}, {1e-12, 1e-300}).value;
}

double FlowEvaluator::varphi_log(double y) const {
  if (y < y0_) return varphi_below_table(y);
  double p = (y - y0_) / h_;
  int i = std::clamp(static_cast<int>(std::floor(p)), 0, table_nodes - 2);
  double s = p - i;
  double s2 = s * s, s3 = s2 * s;
  double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
  return h00 * phi_tab_[i] + h10 * h_ * dphi_tab_[i] + h01 * phi_tab_[i + 1] + h11 * h_ * dphi_tab_[i + 1];
}

double FlowEvaluator::varphi(double lam) const {
  if (!(lam > 0.0) || lam > lambda0_) throw Error(ErrorKind::Domain, "varphi needs lam in (0, lambda0)", {lam});
  if (lam == lambda0_) return 0.0;
  if (zero_) return inf;
  if (closed_ == Closed::Stable) {
    const auto& s = *psi_.as<StableBranching>();
    return (std::pow(lam, -s.alpha) - std::pow(lambda0_, -s.alpha)) / (s.alpha * s.d);
  }
  if (closed_ == Closed::Logistic) {
    auto L = [](double u) { return std::log(u) - std::log1p(-u); };
    return L(lambda0_) - L(lam);
  }
  return varphi_log(std::log(lam));
}

double FlowEvaluator::g_log(double x) const {
  if (x <= phi_tab_.front()) {
    // φ_tab decreasing in the node index
    auto it = std::lower_bound(phi_tab_.rbegin(), phi_tab_.rend(), x);
    int j = static_cast<int>(phi_tab_.rend() - it) - 1;  // φ_j ≥ x
    j = std::clamp(j, 0, table_nodes - 2);
    double a = y0_ + j * h_;
    return solve([&](double y) { return varphi_log(y) - x; }, a, a + h_);
  }
  double hi = y0_, lo = y0_ - 10.0;
  while (varphi_below_table(lo) < x) {
    hi = lo;
    lo = y0_ - 2.0 * (y0_ - lo);
    if (lo < -1e6) return -inf;
  }
  return solve([&](double y) { return varphi_below_table(y) - x; }, lo, hi);
}

double FlowEvaluator::g_inv(double x) const {
  if (!(x >= 0.0)) throw Error(ErrorKind::Domain, "g_inv needs x >= 0", {x});
  if (x == 0.0) return lambda0_;
  if (zero_) throw Error(ErrorKind::Domain, "chart undefined for Psi identically zero");
  if (closed_ == Closed::Stable) {
    const auto& s = *psi_.as<StableBranching>();
    return std::pow(s.alpha * s.d * x + std::pow(lambda0_, -s.alpha), -1.0 / s.alpha);
  }
  if (closed_ == Closed::Logistic) {
    double k = lambda0_ / (1.0 - lambda0_);
    double e = k * std::exp(-x);
    return e / (1.0 + e);
  }
  return std::exp(g_log(x));
}

double FlowEvaluator::log_v_ode(double t, double w) const {
  namespace ode = boost::numeric::odeint;
  using state = std::array<double, 1>;
  if (t == 0.0 || zero_) return w;
  const double rho = crit_.rho;
  const bool fixed_point = rho > 0.0 && std::isfinite(rho);
  const double lrho = fixed_point ? std::log(rho) : 0.0;
  const double drho = fixed_point ? psi_.derivative(rho) : 0.0;

  auto linearized = [&](double w0, double tau) {
    double v0 = std::exp(w0);
    return std::log(rho + (v0 - rho) * std::exp(-drho * tau));
  };
  if (fixed_point && std::abs(w - lrho) < 1e-9) return linearized(w, t);

  auto rhs = [this](const state& x, state& dx, double) { dx[0] = -psi_.over_q(std::exp(x[0])); };
  auto stepper = ode::make_controlled(1e-12, 1e-12, ode::runge_kutta_dopri5<state>());
  state x{w};
  double tc = 0.0;
  double dt = std::min(t, 1e-3 / std::max(1.0, std::abs(psi_.over_q(std::exp(w)))));
  long steps = 0;
  while (tc < t) {
    if (tc + dt > t) dt = t - tc;
    if (stepper.try_step(rhs, x, tc, dt) == ode::fail) {
      if (dt < 1e-300) throw Error(ErrorKind::IntegrationFailure, "step size underflow", {tc, x[0]});
      continue;
    }
    if (!std::isfinite(x[0])) throw Error(ErrorKind::IntegrationFailure, "non-finite flow value", {tc, x[0]});
    if (fixed_point && std::abs(x[0] - lrho) < 1e-7 && tc < t) return linearized(x[0], t - tc);
    if (++steps > 1000000) throw Error(ErrorKind::IntegrationFailure, "too many ODE steps", {tc, x[0]});
  }
  return x[0];
}

double FlowEvaluator::v_ode(double t, double lam) const {
  if (lam == 0.0) return 0.0;
  return std::exp(log_v_ode(t, std::log(lam)));
}

bool FlowEvaluator::chart_forward(double t, double lam, double& out) const {
  if (!has_table() || !(lam < lambda0_)) return false;
  double p = varphi(lam);
  double x = crit_.tag == CritTag::Supercritical ? p - t : p + t;
  if (!(x > 0.0) || x > phi_tab_.front()) return false;
  out = g_inv(x);
  return true;
}

double FlowEvaluator::log_v_forward(double t, double ll) const {
  if (t < 0.0) throw Error(ErrorKind::Domain, "v_forward needs t >= 0");
  if (t == 0.0 || zero_ || ll == -inf) return ll;
  if (closed_ == Closed::Stable) {
    const auto& s = *psi_.as<StableBranching>();
    return -logaddexp(-s.alpha * ll, std::log(s.alpha * s.d * t)) / s.alpha;
  }
  if (closed_ == Closed::Logistic) {
    // 1 − λ + λe^t = 1 + λ(e^t − 1)
    return ll + t - logaddexp(0.0, ll + std::log(std::expm1(t)));
  }
  double v = 0.0;
  if (ll >= y0_ && ll < std::log(lambda0_) && chart_forward(t, std::exp(ll), v)) return std::log(v);
  return log_v_ode(t, ll);
}

double FlowEvaluator::v_forward(double t, double lam) const {
  if (t < 0.0 || lam < 0.0) throw Error(ErrorKind::Domain, "v_forward needs t, lam >= 0", {t, lam});
  if (lam == 0.0) return 0.0;
  if (t == 0.0) return lam;
  if (std::isinf(lam)) return vbar(t);
  return std::exp(log_v_forward(t, std::log(lam)));
}

double FlowEvaluator::vbar(double t) const {
  if (t == 0.0 || zero_) return inf;
  if (closed_ == Closed::Stable) {
    const auto& s = *psi_.as<StableBranching>();
    return std::pow(s.alpha * s.d * t, -1.0 / s.alpha);
  }
  if (closed_ == Closed::Logistic) return -1.0 / std::expm1(-t);
  if (!greys_) return inf;
  return v_forward(t, lambda_big);
}

double FlowEvaluator::v_backward(double t, double lam) const {
  if (t < 0.0 || lam < 0.0) throw Error(ErrorKind::Domain, "v_backward needs t, lam >= 0", {t, lam});
  if (t == 0.0 || lam == 0.0 || zero_) return lam;
  double vb = vbar(t);
  if (!(lam < vb)) throw Error(ErrorKind::Domain, "v_backward: lam beyond vbar_t", {lam, vb});
  if (closed_ == Closed::Stable) {
    const auto& s = *psi_.as<StableBranching>();
    return std::pow(std::pow(lam, -s.alpha) - s.alpha * s.d * t, -1.0 / s.alpha);
  }
  if (closed_ == Closed::Logistic) {
    double e = std::exp(-t);
    return lam * e / (1.0 - lam + lam * e);
  }
  if (has_table() && lam < lambda0_) {
    double p = varphi(lam);
    double x = crit_.tag == CritTag::Supercritical ? p + t : p - t;
    if (x > 0.0 && x <= phi_tab_.front()) return g_inv(x);
  }
  // bisection on μ ↦ v_t(μ) in log scale
  double target = std::log(lam);
  auto f = [&](double m) { return log_v_forward(t, m) - target; };
  double lo = target, hi = target;
  if (f(lo) > 0.0) {
    double step = 1.0 + std::abs(psi_.b()) * t;
    while (f(lo) > 0.0) {
      hi = lo;
      lo -= step;
      step *= 2.0;
      if (lo < -1e7) throw Error(ErrorKind::BisectionFailure, "v_backward: no lower bracket", {lam});
    }
  } else {
    hi = std::log(lambda_big);
    if (f(hi) < 0.0) throw Error(ErrorKind::Domain, "v_backward: lam beyond vbar_t estimate", {lam});
  }
  return std::exp(solve(f, lo, hi));
}

double FlowEvaluator::rho_t(double t) const {
  if (crit_.tag == CritTag::Subcritical) return 1.0;
  if (crit_.tag == CritTag::Critical) throw Error(ErrorKind::Domain, "rho_t is defined only for b != 0");
  return v_backward(t, lambda0_);
}

}  // namespace cbi
