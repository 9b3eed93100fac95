#include "cbi/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>

// pchip.hpp in Boost 1.74 calls isnan unqualified
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>

#include "cbi/error.hpp"
#include "cbi/renorm.hpp"
#include "parallel.hpp"

namespace cbi {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

// Below this many finite samples the map is evaluated pointwise.
constexpr std::size_t direct_limit = 4096;
constexpr std::size_t table_nodes = 4097;

// Applies f to every finite entry of ys, at_neg / at_pos to ±inf entries.
// Large samples go through a monotone cubic table whose nodes are sample
// quantiles, so node density follows the data even for heavy-tailed ln Y.
std::vector<double> map_log(const std::vector<double>& ys, const std::function<double(double)>& f, double at_neg,
                            double at_pos) {
  std::vector<double> out(ys.size());
  std::vector<double> finite;
  for (double y : ys)
    if (std::isfinite(y)) finite.push_back(y);
  std::shared_ptr<boost::math::interpolators::pchip<std::vector<double>>> table;
  if (finite.size() > direct_limit) {
    std::sort(finite.begin(), finite.end());
    std::vector<double> xs;
    for (std::size_t i = 0; i < table_nodes; ++i) {
      double x = finite[i * (finite.size() - 1) / (table_nodes - 1)];
      if (xs.empty() || x > xs.back() + 1e-12 * (1.0 + std::abs(x))) xs.push_back(x);
    }
    if (xs.back() < finite.back()) xs.push_back(finite.back());
    if (xs.size() >= 4) {
      std::vector<double> vs(xs.size());
      detail::parallel_for(xs.size(), [&](std::size_t i) { vs[i] = f(xs[i]); });
      table = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(std::move(xs), std::move(vs));
    }
  }
  for (std::size_t i = 0; i < ys.size(); ++i) {
    double y = ys[i];
    if (y == -inf)
      out[i] = at_neg;
    else if (y == inf)
      out[i] = at_pos;
    else if (table)
      out[i] = (*table)(y);
  }
  if (!table) {
    detail::parallel_for(ys.size(), [&](std::size_t i) {
      if (std::isfinite(ys[i])) out[i] = f(ys[i]);
    });
  }
  return out;
}

// ln(c·Y) for each path
std::vector<double> scaled_logs(const Ensemble& ens, double log_scale) {
  std::vector<double> out(ens.log_values);
  for (double& l : out)
    if (std::isfinite(l)) l += log_scale;
  return out;
}

std::vector<LtPoint> lt_from_logs(const std::vector<double>& logs, std::span<const double> thetas) {
  if (logs.empty()) throw Error(ErrorKind::EmptyEnsemble, "empirical transform of an empty sample");
  std::vector<LtPoint> out;
  double n = static_cast<double>(logs.size());
  for (double th : thetas) {
    if (!(th >= 0.0)) throw Error(ErrorKind::Domain, "theta must be >= 0", {th});
    double s1 = 0.0, s2 = 0.0;
    for (double l : logs) {
      double e = th == 0.0 ? 1.0 : (l == -inf ? 1.0 : std::exp(-std::exp(std::log(th) + l)));
      s1 += e;
      s2 += e * e;
    }
    LtPoint p;
    p.theta = th;
    p.mean = s1 / n;
    p.stderr_ = std::sqrt(std::max(0.0, s2 / n - p.mean * p.mean) / std::max(1.0, n - 1.0));
    out.push_back(p);
  }
  return out;
}

std::vector<double> to_logs(std::span<const double> values) {
  std::vector<double> logs(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0)) throw Error(ErrorKind::Domain, "empirical transform needs nonnegative values", {values[i]});
    logs[i] = values[i] > 0.0 ? std::log(values[i]) : -inf;
  }
  return logs;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

// Empirical vs law CDF at the sample deciles
std::vector<DiagnosticRow> cdf_rows(std::vector<double> samples, const LimitLaw& law) {
  std::sort(samples.begin(), samples.end());
  std::vector<DiagnosticRow> rows;
  double n = static_cast<double>(samples.size());
  for (int k = 1; k <= 9; ++k) {
    double z = samples[static_cast<std::size_t>(k * (samples.size() - 1) / 10)];
    double emp = static_cast<double>(std::upper_bound(samples.begin(), samples.end(), z) - samples.begin()) / n;
    double f = std::isfinite(z) ? cdf(law, std::max(z, 0.0)) : (z > 0.0 ? 1.0 : 0.0);
    rows.push_back({"cdf@" + fmt(z), emp, f, std::sqrt(f * (1.0 - f) / n)});
  }
  return rows;
}

std::vector<DiagnosticRow> lt_rows(const std::vector<double>& logs, const LimitLaw& law, double& max_err) {
  static const double probes[] = {0.5, 1.0, 2.0};
  auto pts = lt_from_logs(logs, probes);
  std::vector<DiagnosticRow> rows;
  max_err = 0.0;
  for (const auto& p : pts) {
    double a = lt(law, p.theta);
    max_err = std::max(max_err, std::abs(p.mean - a));
    rows.push_back({"lt@" + fmt(p.theta), p.mean, a, p.stderr_});
  }
  return rows;
}

bool nonincreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1]) return false;
  return true;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::HypothesisMismatch, what);
}

void require_regime(const RenormEvaluator& re, Regime want, RegimeReport& rep) {
  rep = re.classify_regime();
  if (rep.regime != want)
    throw Error(ErrorKind::HypothesisMismatch,
                std::string("scenario is in regime ") + to_string(rep.regime) + ", theorem needs " + to_string(want));
}

// Index α with Ψ(λ) regularly varying of index 1+α at 0, for the critical theorems
double critical_index(const BranchingMechanism& psi) {
  if (auto* s = psi.as<StableBranching>()) return s->alpha;
  if (psi.sigma() > 0.0) return 1.0;
  TailFunction pi = psi.levy_tail();
  if (pi.kind() == TailFunction::Kind::PowerLaw && pi.rate() > 1.0 && pi.rate() < 2.0) return pi.rate() - 1.0;
  throw Error(ErrorKind::HypothesisMismatch, "critical theorems need a regularly varying branching mechanism");
}

// Immigration slowly varying at 0: no drift and a logarithmic jump tail
bool slowly_varying_phi(const ImmigrationMechanism& phi) {
  if (phi.drift() > 0.0) return false;
  if (!phi.as<TailImmigration>()) return false;
  auto k = phi.levy_tail().kind();
  return k == TailFunction::Kind::OneOverLog || k == TailFunction::Kind::OneOverLogLogLog ||
         k == TailFunction::Kind::COverLog;
}

double default_threshold(const std::string& id) {
  if (id == "ratio") return 0.1;
  if (id == "critical_L") return 0.02;
  if (id == "critical_F") return 0.03;
  return 0.05;
}

Scheme pick_scheme(const Scenario& sc, const VerifyOptions& opt) {
  return opt.scheme ? *opt.scheme : default_scheme(sc.psi, sc.phi);
}

Ensemble run(const Scenario& sc, double x0, double t, std::size_t n, std::uint64_t seed, const Scheme& scheme) {
  SimConfig cfg{sc.psi, sc.phi, x0, t, scheme, seed, n};
  return simulate_ensemble(cfg);
}

struct PerT {
  double stat = 0.0;
  std::vector<DiagnosticRow> rows;
  double aux = 0.0;
};

}  // namespace

std::vector<LtPoint> empirical_lt(std::span<const double> values, std::span<const double> thetas) {
  return lt_from_logs(to_logs(values), thetas);
}

std::vector<LtPoint> empirical_lt(const Ensemble& ens, std::span<const double> thetas) {
  return lt_from_logs(ens.log_values, thetas);
}

double ks_distance(std::vector<double> samples, const LimitLaw& law) {
  if (samples.empty()) throw Error(ErrorKind::EmptyEnsemble, "ks_distance of an empty sample");
  if (!has_cdf(law)) throw Error(ErrorKind::UnsupportedKind, "ks_distance needs a closed-form cdf: " + law_name(law));
  for (double x : samples)
    if (std::isnan(x)) throw Error(ErrorKind::Domain, "ks_distance sample is NaN");
  std::sort(samples.begin(), samples.end());
  double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double f = cdf(law, samples[i]);
    d = std::max({d, std::abs(static_cast<double>(i + 1) / n - f), std::abs(f - static_cast<double>(i) / n)});
  }
  return d;
}

const std::vector<std::string>& theorem_ids() {
  static const std::vector<std::string> ids = {"main_exp_limit", "ratio",      "regime_S",   "regime_L",
                                               "regime_F",       "critical_L", "critical_F", "subordinator"};
  return ids;
}

VerificationVerdict verify_theorem(const Scenario& sc, const std::string& id, std::span<const double> t_list,
                                   std::size_t n_paths, std::uint64_t seed, const VerifyOptions& opt) {
  if (std::find(theorem_ids().begin(), theorem_ids().end(), id) == theorem_ids().end())
    throw Error(ErrorKind::InvalidArgument, "unknown theorem id: " + id);
  if (t_list.empty()) throw Error(ErrorKind::InvalidArgument, "t list is empty");
  for (double t : t_list)
    if (!(t > 0.0)) throw Error(ErrorKind::InvalidArgument, "times must be > 0", {t});
  if (n_paths < 1) throw Error(ErrorKind::InvalidArgument, "n_paths must be >= 1");

  VerificationVerdict v;
  v.theorem_id = id;
  v.threshold = opt.threshold ? *opt.threshold : default_threshold(id);
  v.t_list.assign(t_list.begin(), t_list.end());
  v.n_paths = n_paths;
  v.seed = seed;

  auto re = std::make_shared<RenormEvaluator>(sc);
  const double b = sc.psi.b();
  Scheme scheme = pick_scheme(sc, opt);
  v.scheme = scheme_name(scheme);

  std::function<PerT(double)> step;

  if (id == "subordinator") {
    require(sc.psi.is_zero(), "subordinator proposition needs Psi = 0");
    require(slowly_varying_phi(sc.phi), "subordinator proposition needs Phi slowly varying at 0");
    v.scheme = "subordinator";
    step = [&](double t) {
      Ensemble ens = simulate_subordinator(sc.phi, t, seed, n_paths);
      v.fingerprint = ens.fingerprint;
      auto vals = map_log(ens.log_values, [&](double l) { return t * sc.phi.at_log(-l); },
                          t * sc.phi.jump_mass(), 0.0);
      return PerT{ks_distance(vals, Exp1{}), cdf_rows(vals, Exp1{})};
    };
  } else if (id == "main_exp_limit" || id == "ratio" || id.rfind("regime_", 0) == 0) {
    require(b != 0.0, "theorem needs a non-critical branching mechanism");
    require(divergence_test(sc.psi, sc.phi) == Divergence::Infinite, "theorem needs the divergent immigration integral");
    if (id == "main_exp_limit") {
      step = [&](double t) {
        Ensemble ens = run(sc, sc.x0, t, n_paths, seed, scheme);
        v.fingerprint = ens.fingerprint;
        double r_inf = re->r_infinity(t);
        auto vals = map_log(ens.log_values, [&](double l) { return re->r_eval_log(t, -l); }, r_inf, 0.0);
        return PerT{ks_distance(vals, Exp1{}), cdf_rows(vals, Exp1{})};
      };
    } else if (id == "ratio") {
      // both copies start from 0
      step = [&](double t) {
        Ensemble ens = run(sc, 0.0, t, 2 * n_paths, seed, scheme);
        v.fingerprint = ens.fingerprint;
        const double lo = std::log(0.2), hi = std::log(5.0);
        std::size_t in_window = 0, below = 0;
        for (std::size_t i = 0; i < n_paths; ++i) {
          double a = ens.log_values[i], c = ens.log_values[n_paths + i];
          if (a == -inf) {  // 0/Ỹ = 0, including 0/0
            ++below;
            continue;
          }
          if (c == -inf) continue;  // Y/0 = ∞
          double d = a - c;
          if (d >= lo && d <= hi) ++in_window;
          if (d < 0.0) ++below;
        }
        double nn = static_cast<double>(n_paths);
        double fw = in_window / nn, fb = below / nn;
        PerT p;
        p.stat = fw;
        p.aux = fb;
        p.rows = {{"fraction_in_window", fw, 0.0, std::sqrt(fw * (1.0 - fw) / nn)},
                  {"fraction_below_one", fb, 0.5, std::sqrt(fb * (1.0 - fb) / nn)}};
        return p;
      };
    } else {
      Regime want = id == "regime_S" ? Regime::S : id == "regime_L" ? Regime::L : Regime::F;
      if (id != "regime_S" && id != "regime_L" && id != "regime_F")
        throw Error(ErrorKind::InvalidArgument, "unknown theorem id: " + id);
      RegimeReport rep;
      require_regime(*re, want, rep);
      const double ab = std::abs(b);
      step = [&, want, rep, ab](double t) {
        Ensemble ens = run(sc, sc.x0, t, n_paths, seed, scheme);
        v.fingerprint = ens.fingerprint;
        double log_rho = std::log(re->flow().rho_t(t));
        std::vector<double> vals;
        LimitLaw law;
        if (want == Regime::S) {
          double norm = re->log_m(ab * t);
          auto logs = scaled_logs(ens, log_rho);
          vals = map_log(logs, [&](double l) { return std::exp(re->log_m(l) - norm); }, 0.0, 1.0);
          law = Uniform01{};
        } else if (want == Regime::L) {
          double denom = ab * t;
          for (double l : ens.log_values) vals.push_back(l == -inf ? 0.0 : (l + log_rho) / denom);
          law = ULaw{rep.a};
        } else {
          double denom = re->h_inverse(ab * t);
          for (double l : ens.log_values) vals.push_back(l == -inf ? 0.0 : l / denom);
          law = UFLaw{rep.delta};
        }
        return PerT{ks_distance(vals, law), cdf_rows(vals, law)};
      };
    }
  } else {
    require(b == 0.0, "critical theorems need b = 0");
    double alpha = critical_index(sc.psi);
    RegimeReport rep;
    if (id == "critical_L") {
      require_regime(*re, Regime::L, rep);
      LimitLaw law = VLLaw{alpha, rep.a};
      step = [&, law](double t) {
        Ensemble ens = run(sc, sc.x0, t, n_paths, seed, scheme);
        v.fingerprint = ens.fingerprint;
        PerT p;
        p.rows = lt_rows(scaled_logs(ens, std::log(re->flow().g_inv(t))), law, p.stat);
        return p;
      };
    } else {
      require_regime(*re, Regime::F, rep);
      require(rep.delta > 0.0, "critical fast regime needs delta > 0");
      LimitLaw law = VFLaw{rep.delta * alpha};
      step = [&, law](double t) {
        Ensemble ens = run(sc, sc.x0, t, n_paths, seed, scheme);
        v.fingerprint = ens.fingerprint;
        PerT p;
        p.rows = lt_rows(scaled_logs(ens, std::log(sc.phi.inverse(1.0 / t))), law, p.stat);
        return p;
      };
    }
  }

  double last_aux = 0.5;
  for (double t : v.t_list) {
    PerT p = step(t);
    v.per_t.push_back(p.stat);
    for (auto& r : p.rows) {
      r.probe = "t=" + fmt(t) + ":" + r.probe;
      v.diagnostics.push_back(std::move(r));
    }
    last_aux = p.aux;
  }
  v.statistic = v.per_t.back();
  v.pass = v.statistic <= v.threshold;
  v.trend_ok = nonincreasing(v.per_t);
  if (id == "ratio") v.auxiliary_ok = std::abs(last_aux - 0.5) <= 0.02;
  return v;
}

VerificationVerdict stationary_check(const Scenario& sc, double t, std::size_t n_paths, std::uint64_t seed,
                                     const VerifyOptions& opt) {
  if (!(t >= 0.0)) throw Error(ErrorKind::InvalidArgument, "t must be >= 0", {t});
  if (n_paths < 1) throw Error(ErrorKind::InvalidArgument, "n_paths must be >= 1");
  require(divergence_test(sc.psi, sc.phi) == Divergence::Finite, "stationary check needs the convergent case");

  VerificationVerdict v;
  v.theorem_id = "stationary";
  v.threshold = opt.threshold ? *opt.threshold : 0.02;
  v.t_list = {t};
  v.n_paths = n_paths;
  v.seed = seed;
  Scheme scheme = pick_scheme(sc, opt);
  v.scheme = scheme_name(scheme);

  auto re = std::make_shared<RenormEvaluator>(sc);
  const double b = sc.psi.b();
  static const double probes[] = {0.5, 1.0, 2.0};

  std::vector<double> analytic;
  double log_scale = 0.0;
  if (b >= 0.0) {
    for (double th : probes) analytic.push_back(std::exp(-re->integral_from_zero(th)));
  } else {
    double lam = re->flow().lambda0();
    WLambda w{sc.x0, lam, re};
    for (double th : probes) analytic.push_back(lt(w, th));
    if (t > 0.0) log_scale = std::log(re->flow().v_backward(t, lam));
    else log_scale = std::log(lam);
  }

  std::vector<LtPoint> pts;
  if (t == 0.0) {
    // Y_0 = x0
    std::vector<double> one{sc.x0 * std::exp(log_scale)};
    pts = empirical_lt(one, probes);
    v.fingerprint = 0;
  } else {
    Ensemble ens = run(sc, sc.x0, t, n_paths, seed, scheme);
    v.fingerprint = ens.fingerprint;
    pts = lt_from_logs(scaled_logs(ens, log_scale), probes);
  }
  double err = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    err = std::max(err, std::abs(pts[i].mean - analytic[i]));
    v.diagnostics.push_back({"lt@" + fmt(pts[i].theta), pts[i].mean, analytic[i], pts[i].stderr_});
  }
  v.statistic = err;
  v.per_t = {err};
  v.pass = err <= v.threshold;
  return v;
}

}  // namespace cbi
