#include "cbi/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "cbi/error.hpp"
#include "cbi/random.hpp"
#include "cbi/renorm.hpp"
#include "parallel.hpp"

namespace cbi {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double logaddexp(double a, double b) {
  if (a == -inf) return b;
  if (b == -inf) return a;
  double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// (b, σ) when Ψ is quadratic in disguise
bool quadratic_params(const BranchingMechanism& psi, double& b, double& sigma) {
  if (auto* q = psi.as<QuadraticBranching>()) {
    b = q->b;
    sigma = q->sigma;
    return true;
  }
  if (psi.as<LogisticBranching>()) {
    b = -1.0;
    sigma = std::sqrt(2.0);
    return true;
  }
  if (auto* s = psi.as<StableBranching>(); s && s->alpha == 1.0) {
    b = 0.0;
    sigma = std::sqrt(2.0 * s->d);
    return true;
  }
  return false;
}

bool finite_jumps(const ImmigrationMechanism& phi) {
  if (phi.as<StableImmigration>()) return phi.drift() > 0.0;  // β = 1 is a pure drift
  return std::isfinite(phi.jump_mass());
}

// Immigrant jumps on [0, h]: returns ln Σ J and fills the arrival times when asked.
double compound_poisson_log(const TailFunction& nu, double h, rng::Stream& s) {
  std::uint64_t k = s.poisson(nu.mass() * h);
  double acc = -inf;
  for (std::uint64_t i = 0; i < k; ++i) acc = logaddexp(acc, nu.sample_log_above(0.0, s.uniform()));
  return acc;
}

struct EulerPlan {
  double b, sigma, drift;
  double eps;
  TailFunction pi, nu;
  double pi_rate, pi_m1, pi_m2, nu_rate;
  int sub;
};

double euler_path(const EulerPlan& p, double x0, double T, double dt, rng::Stream& s) {
  double y = x0;
  long n = std::max(1L, static_cast<long>(std::ceil(T / dt - 1e-9)));
  for (long k = 0; k < n; ++k) {
    double h = std::min(dt, T - k * dt);
    if (h <= 0.0) break;
    double yp = std::max(y, 0.0);
    double dw = 0.0;
    for (int j = 0; j < p.sub; ++j) dw += s.gaussian();
    dw *= std::sqrt(h / p.sub);
    double cont = (p.drift - p.b * yp - yp * p.pi_m1) * h + p.sigma * std::sqrt(yp) * dw;
    if (p.pi_m2 > 0.0) cont += std::sqrt(yp * h * p.pi_m2) * s.gaussian();
    if (std::abs(cont) > 1e6 * (yp + 1.0))
      throw Error(ErrorKind::StepInstability, "Euler step moved Y by more than a factor 1e6", {k * dt, y, cont});
    double jumps = 0.0;
    if (p.pi_rate > 0.0 && yp > 0.0) {
      std::uint64_t m = s.poisson(yp * h * p.pi_rate);
      for (std::uint64_t i = 0; i < m; ++i) jumps += std::exp(p.pi.sample_log_above(p.eps, s.uniform()));
    }
    if (p.nu_rate > 0.0) {
      std::uint64_t m = s.poisson(h * p.nu_rate);
      for (std::uint64_t i = 0; i < m; ++i) jumps += std::exp(p.nu.sample_log_above(p.eps, s.uniform()));
    }
    y = std::max(0.0, y + cont + jumps);
    if (std::isinf(y)) return inf;
  }
  return y;
}

// ln Y_T for the exact scheme
double exact_path_log(const BranchingMechanism& psi, const ImmigrationMechanism& phi, double x0, double T,
                      rng::Stream& s) {
  double b = 0.0, sigma = 0.0;
  quadratic_params(psi, b, sigma);
  double base = rng::cir_transition(x0, phi.drift(), b, sigma, T, s);
  double acc = base > 0.0 ? std::log(base) : -inf;
  if (auto* t = phi.as<TailImmigration>(); t && t->nu_bar.mass() > 0.0) {
    const TailFunction& nu = t->nu_bar;
    std::uint64_t k = s.poisson(nu.mass() * T);
    for (std::uint64_t i = 0; i < k; ++i) {
      double tau = T * s.uniform();  // time left after the arrival
      double lj = nu.sample_log_above(0.0, s.uniform());
      double lp;
      if (sigma == 0.0) {
        lp = lj - b * tau;
      } else if (lj < 40.0) {
        double x = rng::cir_transition(std::exp(lj), 0.0, b, sigma, tau, s);
        lp = x > 0.0 ? std::log(x) : -inf;
      } else {
        // huge offspring mass: relative fluctuations are below 1e-8, Gaussian in log scale
        double k2 = b != 0.0 ? -std::expm1(-b * tau) / b : tau;
        double rel = std::sqrt(sigma * sigma * k2 * std::exp(b * tau - lj));
        lp = lj - b * tau + std::log1p(rel * s.gaussian());
      }
      acc = logaddexp(acc, lp);
    }
  }
  return acc;
}

double split_path(const BranchingMechanism& psi, const ImmigrationMechanism& phi, double x0, double T, double dt,
                  rng::Stream& s) {
  double b = 0.0, sigma = 0.0;
  bool quad = quadratic_params(psi, b, sigma);
  const auto* st = psi.as<StableBranching>();
  const auto* fs = phi.as<StableImmigration>();
  const auto* ft = phi.as<TailImmigration>();
  double drift = phi.drift();
  double y = x0;
  long n = std::max(1L, static_cast<long>(std::ceil(T / dt - 1e-9)));
  for (long k = 0; k < n; ++k) {
    double h = std::min(dt, T - k * dt);
    if (h <= 0.0) break;
    if (fs && fs->beta_idx < 1.0)
      y += std::pow(fs->d_prime * h, 1.0 / fs->beta_idx) * rng::stable_positive(fs->beta_idx, s);
    if (ft && ft->nu_bar.mass() > 0.0) {
      double lj = compound_poisson_log(ft->nu_bar, h, s);
      if (lj > -inf) y += std::exp(lj);
    }
    if (std::isinf(y)) return inf;
    if (quad) {
      y = rng::cir_transition(y, drift, b, sigma, h, s);
    } else {
      double a = 1.0 + st->alpha;
      double yp = std::max(y, 0.0);
      y = y + drift * h + std::pow(st->d * yp * h, 1.0 / a) * rng::stable_spectrally_positive(a, s);
      y = std::max(y, 0.0);
    }
  }
  return y;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string scheme_name(const Scheme& s) {
  if (std::holds_alternative<EulerJump>(s)) return "euler";
  if (std::holds_alternative<ExactQuadratic>(s)) return "exact";
  return "split";
}

bool exact_admissible(const BranchingMechanism& psi, const ImmigrationMechanism& phi) {
  double b, sigma;
  if (!quadratic_params(psi, b, sigma)) return false;
  if (auto* f = phi.as<StableImmigration>()) return f->beta_idx == 1.0;
  return finite_jumps(phi);
}

bool split_admissible(const BranchingMechanism& psi, const ImmigrationMechanism& phi) {
  double b, sigma;
  bool branching_ok = quadratic_params(psi, b, sigma) || psi.as<StableBranching>();
  bool imm_ok = phi.as<StableImmigration>() || finite_jumps(phi);
  return branching_ok && imm_ok;
}

Scheme default_scheme(const BranchingMechanism& psi, const ImmigrationMechanism& phi) {
  if (exact_admissible(psi, phi)) return ExactQuadratic{};
  if (split_admissible(psi, phi)) return SplitStep{0.01};
  return EulerJump{};
}

std::size_t worker_count() {
  if (const char* e = std::getenv("CBI_THREADS")) {
    long v = std::strtol(e, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::uint64_t fingerprint(const SimConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << cfg.psi.describe() << '|' << cfg.phi.describe() << '|' << cfg.x0 << '|' << cfg.horizon << '|'
     << scheme_name(cfg.scheme);
  if (auto* e = std::get_if<EulerJump>(&cfg.scheme)) os << ':' << e->dt << ':' << e->eps_trunc << ':' << e->substeps;
  if (auto* sp = std::get_if<SplitStep>(&cfg.scheme)) os << ':' << sp->dt;
  os << '|' << cfg.seed << '|' << cfg.n_paths;
  return fnv1a(os.str());
}

Ensemble simulate_ensemble(const SimConfig& cfg) {
  if (cfg.n_paths < 1) throw Error(ErrorKind::InvalidArgument, "n_paths must be >= 1");
  if (!(cfg.horizon > 0.0)) throw Error(ErrorKind::InvalidArgument, "horizon must be > 0");
  if (!(cfg.x0 >= 0.0)) throw Error(ErrorKind::InvalidArgument, "x0 must be >= 0");

  Ensemble ens;
  ens.t = cfg.horizon;
  ens.scheme = scheme_name(cfg.scheme);
  ens.fingerprint = fingerprint(cfg);
  const std::size_t n = cfg.n_paths;
  ens.terminal_values.assign(n, 0.0);
  ens.log_values.assign(n, -inf);
  ens.path_seeds.resize(n);
  for (std::size_t k = 0; k < n; ++k) ens.path_seeds[k] = rng::path_seed(cfg.seed, k);

  auto store_linear = [&ens](std::size_t k, double y) {
    ens.terminal_values[k] = y;
    ens.log_values[k] = y > 0.0 ? std::log(y) : -inf;
  };

  if (auto* e = std::get_if<EulerJump>(&cfg.scheme)) {
    if (!(e->dt > 0.0) || e->dt > cfg.horizon) throw Error(ErrorKind::InvalidArgument, "need 0 < dt <= horizon");
    if (!(e->eps_trunc > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps_trunc must be > 0");
    if (e->substeps < 1) throw Error(ErrorKind::InvalidArgument, "substeps must be >= 1");
    EulerPlan p;
    p.b = cfg.psi.b();
    p.sigma = cfg.psi.sigma();
    p.eps = e->eps_trunc;
    p.pi = cfg.psi.levy_tail();
    p.nu = cfg.phi.levy_tail();
    p.pi_rate = p.pi(p.eps);
    p.pi_m1 = p.pi.moment1_above(p.eps);
    p.pi_m2 = p.pi.moment2_below(p.eps);
    p.nu_rate = p.nu(p.eps);
    p.drift = cfg.phi.drift() + p.nu.moment1_below(p.eps);
    p.sub = e->substeps;
    if (!std::isfinite(p.pi_m1)) throw Error(ErrorKind::SchemeMismatch, "branching measure needs a finite mean");
    detail::parallel_for(n, [&](std::size_t k) {
      rng::Stream s(ens.path_seeds[k]);
      store_linear(k, euler_path(p, cfg.x0, cfg.horizon, e->dt, s));
    });
    return ens;
  }
  if (std::holds_alternative<ExactQuadratic>(cfg.scheme)) {
    if (!exact_admissible(cfg.psi, cfg.phi))
      throw Error(ErrorKind::SchemeMismatch, "exact scheme needs quadratic Psi and linear or compound-Poisson Phi");
    detail::parallel_for(n, [&](std::size_t k) {
      rng::Stream s(ens.path_seeds[k]);
      double l = exact_path_log(cfg.psi, cfg.phi, cfg.x0, cfg.horizon, s);
      ens.log_values[k] = l;
      ens.terminal_values[k] = std::exp(l);
    });
    return ens;
  }
  const auto& sp = std::get<SplitStep>(cfg.scheme);
  if (!(sp.dt > 0.0) || sp.dt > cfg.horizon) throw Error(ErrorKind::InvalidArgument, "need 0 < dt <= horizon");
  if (!split_admissible(cfg.psi, cfg.phi))
    throw Error(ErrorKind::SchemeMismatch, "split scheme needs quadratic or stable Psi and finite-activity or stable Phi");
  detail::parallel_for(n, [&](std::size_t k) {
    rng::Stream s(ens.path_seeds[k]);
    store_linear(k, split_path(cfg.psi, cfg.phi, cfg.x0, cfg.horizon, sp.dt, s));
  });
  return ens;
}

Ensemble simulate_subordinator(const ImmigrationMechanism& phi, double horizon, std::uint64_t seed,
                               std::size_t n_paths) {
  if (n_paths < 1) throw Error(ErrorKind::InvalidArgument, "n_paths must be >= 1");
  if (!(horizon > 0.0)) throw Error(ErrorKind::InvalidArgument, "horizon must be > 0");
  TailFunction nu = phi.levy_tail();
  if (!std::isfinite(nu.mass())) throw Error(ErrorKind::InfiniteActivity, "subordinator sampler needs finite jump mass");
  double drift = phi.drift() * horizon;
  Ensemble ens;
  ens.t = horizon;
  ens.scheme = "subordinator";
  std::ostringstream os;
  os.precision(17);
  os << "subordinator|" << phi.describe() << '|' << horizon << '|' << seed << '|' << n_paths;
  ens.fingerprint = fnv1a(os.str());
  ens.terminal_values.assign(n_paths, 0.0);
  ens.log_values.assign(n_paths, -inf);
  ens.path_seeds.resize(n_paths);
  for (std::size_t k = 0; k < n_paths; ++k) ens.path_seeds[k] = rng::path_seed(seed, k);
  detail::parallel_for(n_paths, [&](std::size_t k) {
    rng::Stream s(ens.path_seeds[k]);
    double l = drift > 0.0 ? std::log(drift) : -inf;
    if (nu.mass() > 0.0) l = logaddexp(l, compound_poisson_log(nu, horizon, s));
    ens.log_values[k] = l;
    ens.terminal_values[k] = std::exp(l);
  });
  return ens;
}

std::vector<MartingalePoint> martingale_check(const SimConfig& cfg, double lambda, std::span<const double> times) {
  RenormEvaluator re(cfg.psi, cfg.phi);
  const auto& c = re.flow().crit();
  if (c.tag != CritTag::Supercritical)
    throw Error(ErrorKind::HypothesisMismatch, "martingale check needs a supercritical mechanism");
  if (!(lambda > 0.0 && lambda < c.rho)) throw Error(ErrorKind::Domain, "martingale check needs lambda in (0, rho)");
  std::vector<MartingalePoint> out;
  for (double t : times) {
    MartingalePoint p;
    p.t = t;
    if (t == 0.0) {
      p.mean = std::exp(-lambda * cfg.x0);
      p.v_back = lambda;
      out.push_back(p);
      continue;
    }
    double v = re.flow().v_backward(t, lambda);
    p.v_back = v;
    p.kappa = std::exp(re.log_integral(std::log(lambda), std::log(v)));
    SimConfig c2 = cfg;
    c2.horizon = t;
    Ensemble ens = simulate_ensemble(c2);
    double s1 = 0.0, s2 = 0.0;
    for (double y : ens.terminal_values) {
      double m = p.kappa * std::exp(-v * y);
      s1 += m;
      s2 += m * m;
    }
    double nn = static_cast<double>(ens.size());
    p.mean = s1 / nn;
    p.stderr_ = std::sqrt(std::max(0.0, s2 / nn - p.mean * p.mean) / std::max(1.0, nn - 1.0));
    out.push_back(p);
  }
  return out;
}

}  // namespace cbi
