#include "cli/app.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "cbi/error.hpp"
#include "cbi/limit_laws.hpp"
#include "cbi/renorm.hpp"
#include "cbi/simulate.hpp"
#include "cbi/stats.hpp"
#include "cbi/version.hpp"
#include "cli/scenario_io.hpp"

namespace cbi::cli {

namespace {

constexpr int exit_numeric = 1;
constexpr int exit_hypothesis = 2;
constexpr int exit_usage = 64;

std::string num12(double x) {
  std::ostringstream os;
  os << std::setprecision(12) << x;
  return os.str();
}

json num_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json header(const Scenario* sc) {
  json j{{"tool", "cbi"}, {"version", version}};
  if (sc) j["scenario_fingerprint"] = hex(scenario_fingerprint(*sc));
  return j;
}

void stamp(std::ostream& err, const Scenario& sc) {
  err << "cbi " << version << " scenario " << hex(scenario_fingerprint(sc)) << '\n';
}

// Opens `path` or falls back to `out` when empty
struct Sink {
  std::ofstream file;
  std::ostream* os;
  Sink(const std::string& path, std::ostream& out) : os(&out) {
    if (!path.empty()) {
      file.open(path);
      if (!file) throw Error(ErrorKind::InvalidArgument, "cannot write '" + path + "'");
      os = &file;
    }
  }
  std::ostream& operator*() { return *os; }
};

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      v.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidArgument, "malformed number list '" + s + "'");
    }
  }
  if (v.empty()) throw Error(ErrorKind::InvalidArgument, "empty number list");
  return v;
}

// lo:hi:step, inclusive of hi up to rounding
std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t pos = 0;
      parts.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidArgument, "malformed grid '" + s + "'");
    }
  }
  if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0])
    throw Error(ErrorKind::InvalidArgument, "grid must be lo:hi:step with step > 0 and hi >= lo");
  std::vector<double> g;
  long n = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
  for (long i = 0; i <= n; ++i) g.push_back(parts[0] + static_cast<double>(i) * parts[2]);
  return g;
}

json regime_json(const RegimeReport& rep) {
  json trace = json::array();
  for (auto [x, v] : rep.trace) trace.push_back({x, v});
  return {{"regime", to_string(rep.regime)},
          {"a", num_or_null(rep.a)},
          {"delta", num_or_null(rep.delta)},
          {"trace", trace},
          {"thresholds",
           {{"s_threshold", rep.thresholds.s_threshold},
            {"l_spread", rep.thresholds.l_spread},
            {"f_threshold", rep.thresholds.f_threshold}}}};
}

json verdict_json(const VerificationVerdict& v) {
  json diag = json::array();
  for (const auto& d : v.diagnostics)
    diag.push_back({{"probe", d.probe}, {"empirical", d.empirical}, {"analytic", d.analytic}, {"stderr", d.stderr_}});
  return {{"theorem_id", v.theorem_id},
          {"statistic", v.statistic},
          {"threshold", v.threshold},
          {"pass", v.pass},
          {"trend_ok", v.trend_ok},
          {"auxiliary_ok", v.auxiliary_ok},
          {"accepted", v.accepted()},
          {"t_list", v.t_list},
          {"per_t", v.per_t},
          {"diagnostics", diag},
          {"scheme", v.scheme},
          {"fingerprint", hex(v.fingerprint)},
          {"n_paths", v.n_paths},
          {"seed", v.seed}};
}

struct SchemeFlags {
  std::string name = "auto";
  double dt = std::numeric_limits<double>::quiet_NaN();
  double eps = 1e-4;
  int substeps = 1;

  void add(CLI::App* sub) {
    sub->add_option("--scheme", name, "auto, exact, euler or split")
        ->check(CLI::IsMember({"auto", "exact", "euler", "split"}));
    sub->add_option("--dt", dt, "time step for euler and split");
    sub->add_option("--eps", eps, "small-jump truncation for euler");
    sub->add_option("--substeps", substeps, "Brownian substeps per euler step");
  }
  std::optional<Scheme> get() const {
    if (name == "exact") return ExactQuadratic{};
    if (name == "euler") return EulerJump{std::isnan(dt) ? 1e-3 : dt, eps, substeps};
    if (name == "split") return SplitStep{std::isnan(dt) ? 0.1 : dt};
    return std::nullopt;
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Continuous-state branching processes with immigration"};
  app.name("cbi");
  app.set_version_flag("--version", std::string(version));
  app.require_subcommand(1);

  std::string scenario_path;
  double t = 0.0, lambda = 0.0;
  bool inverse = false;

  auto* classify = app.add_subcommand("classify", "divergence regime of a scenario (JSON)");
  classify->add_option("--scenario", scenario_path)->required();

  auto* flow = app.add_subcommand("flow", "v_t(lambda), or v_{-t}(lambda) with --inverse");
  flow->add_option("--scenario", scenario_path)->required();
  flow->add_option("--t", t)->required();
  flow->add_option("--lambda", lambda)->required();
  flow->add_flag("--inverse", inverse);

  auto* renorm = app.add_subcommand("renorm", "r_t(lambda) and c_t(r_t(lambda))");
  renorm->add_option("--scenario", scenario_path)->required();
  renorm->add_option("--t", t)->required();
  renorm->add_option("--lambda", lambda)->required();

  std::string kind, grid = "0:4:0.5";
  double alpha = 1.0, a = 1.0, delta = 1.0, beta = 1.0, x = 0.0;
  auto* law = app.add_subcommand("law", "Laplace transform (and cdf) of a limit law on a grid (CSV)");
  law->add_option("--kind", kind)
      ->required()
      ->check(CLI::IsMember({"Exp1", "Uniform01", "UL", "UF", "VL", "VF", "StationaryStable", "WLambda"}));
  law->add_option("--alpha", alpha);
  law->add_option("--a", a);
  law->add_option("--delta", delta);
  law->add_option("--beta", beta);
  law->add_option("--x", x, "WLambda initial value");
  law->add_option("--lambda", lambda, "WLambda reference point");
  law->add_option("--scenario", scenario_path, "WLambda mechanisms");
  law->add_option("--grid", grid, "lo:hi:step");

  double x0 = std::numeric_limits<double>::quiet_NaN();
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::string out_path, csv_path;
  SchemeFlags sf;
  auto* simulate = app.add_subcommand("simulate", "terminal values of an ensemble (CSV)");
  simulate->add_option("--scenario", scenario_path)->required();
  simulate->add_option("--x0", x0, "overrides the scenario x0");
  simulate->add_option("--t", t)->required();
  simulate->add_option("--n", n);
  simulate->add_option("--seed", seed);
  simulate->add_option("--out", out_path);
  sf.add(simulate);

  std::string theorem, t_list = "";
  double threshold = std::numeric_limits<double>::quiet_NaN();
  auto* verify = app.add_subcommand("verify", "Monte Carlo check of a limit theorem (JSON verdict)");
  verify->add_option("--scenario", scenario_path)->required();
  std::vector<std::string> ids = theorem_ids();
  ids.push_back("stationary");
  verify->add_option("--theorem", theorem)->required()->check(CLI::IsMember(ids));
  verify->add_option("--t", t_list, "comma-separated times")->required();
  verify->add_option("--n", n);
  verify->add_option("--seed", seed);
  verify->add_option("--threshold", threshold);
  verify->add_option("--out", out_path);
  verify->add_option("--csv", csv_path, "diagnostics: probe, empirical, analytic, stderr");
  sf.add(verify);

  bool as_json = false;
  auto* transience = app.add_subcommand("transience", "transience test for b >= 0");
  transience->add_option("--scenario", scenario_path)->required();
  transience->add_flag("--json", as_json, "print the full report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : exit_usage;
  }

  try {
    if (*law) {
      LimitLaw l;
      std::shared_ptr<Scenario> sc;
      if (kind == "Exp1") l = Exp1{};
      else if (kind == "Uniform01") l = Uniform01{};
      else if (kind == "UL") l = ULaw{a};
      else if (kind == "UF") l = UFLaw{delta};
      else if (kind == "VL") l = VLLaw{alpha, a};
      else if (kind == "VF") l = VFLaw{beta};
      else if (kind == "StationaryStable") l = StationaryStable{alpha, beta};
      else {
        if (scenario_path.empty()) throw Error(ErrorKind::InvalidArgument, "WLambda needs --scenario");
        sc = std::make_shared<Scenario>(load_scenario(scenario_path));
        l = WLambda{x, lambda, std::make_shared<RenormEvaluator>(*sc)};
      }
      auto g = parse_grid(grid);
      bool with_cdf = has_cdf(l);
      out << "# cbi " << version << " law=" << law_name(l);
      if (sc) out << " scenario=" << hex(scenario_fingerprint(*sc));
      out << '\n' << (with_cdf ? "theta,lt,cdf\n" : "theta,lt\n");
      for (double th : g) {
        out << num12(th) << ',' << num12(lt(l, th));
        if (with_cdf) out << ',' << num12(cdf(l, th));
        out << '\n';
      }
      return 0;
    }

    Scenario sc = load_scenario(scenario_path);

    if (*classify) {
      RenormEvaluator re(sc);
      json j = header(&sc);
      j["divergence"] = to_string(re.divergence());
      j["criticality"] = to_string(re.flow().crit().tag);
      if (re.divergence() == Divergence::Finite) {
        RegimeReport rep;
        rep.thresholds = {sc.s_threshold, sc.l_spread, sc.f_threshold};
        j.update(regime_json(rep));
      } else {
        j.update(regime_json(re.classify_regime()));
      }
      out << j.dump(2) << '\n';
      return 0;
    }
    if (*flow) {
      stamp(err, sc);
      FlowEvaluator fe(sc.psi, sc.lambda0);
      out << num12(inverse ? fe.v_backward(t, lambda) : fe.v_forward(t, lambda)) << '\n';
      return 0;
    }
    if (*renorm) {
      stamp(err, sc);
      RenormEvaluator re(sc);
      double r = re.r_eval(t, lambda);
      out << num12(r) << '\n' << num12(re.c_eval(t, r)) << '\n';
      return 0;
    }
    if (*simulate) {
      SimConfig cfg{sc.psi, sc.phi, std::isnan(x0) ? sc.x0 : x0, t, ExactQuadratic{}, seed, n};
      cfg.scheme = sf.get().value_or(default_scheme(sc.psi, sc.phi));
      Ensemble ens = simulate_ensemble(cfg);
      Sink s(out_path, out);
      *s << "# cbi " << version << " scenario=" << hex(scenario_fingerprint(sc)) << " fingerprint=" << hex(ens.fingerprint)
         << " scheme=" << ens.scheme << " t=" << num12(t) << '\n';
      *s << "path_index,terminal_value\n";
      for (std::size_t k = 0; k < ens.size(); ++k) *s << k << ',' << num12(ens.terminal_values[k]) << '\n';
      return 0;
    }
    if (*verify) {
      VerifyOptions opt;
      opt.scheme = sf.get();
      if (!std::isnan(threshold)) opt.threshold = threshold;
      auto ts = parse_list(t_list);
      VerificationVerdict v = theorem == "stationary" ? stationary_check(sc, ts.back(), n, seed, opt)
                                                      : verify_theorem(sc, theorem, ts, n, seed, opt);
      json j = header(&sc);
      j.update(verdict_json(v));
      if (!out_path.empty()) {
        Sink s(out_path, out);
        *s << j.dump(2) << '\n';
        out << (v.accepted() ? "PASS" : "FAIL") << ' ' << v.theorem_id << " statistic=" << num12(v.statistic)
            << " threshold=" << num12(v.threshold) << '\n';
      } else {
        out << j.dump(2) << '\n';
      }
      if (!csv_path.empty()) {
        Sink s(csv_path, out);
        *s << "# cbi " << version << " scenario=" << hex(scenario_fingerprint(sc)) << " fingerprint=" << hex(v.fingerprint)
           << '\n';
        *s << "probe,empirical,analytic,stderr\n";
        for (const auto& d : v.diagnostics)
          *s << d.probe << ',' << num12(d.empirical) << ',' << num12(d.analytic) << ',' << num12(d.stderr_) << '\n';
      }
      return 0;
    }
    if (*transience) {
      RenormEvaluator re(sc);
      TransienceReport rep = re.transience_test();
      if (as_json) {
        json j = header(&sc);
        j["verdict"] = to_string(rep.verdict);
        j["decade_integrals"] = rep.decade_integrals;
        j["tail_ratio"] = rep.tail_ratio;
        if (rep.has_regime) j["regime"] = regime_json(rep.regime);
        out << j.dump(2) << '\n';
      } else {
        stamp(err, sc);
        out << to_string(rep.verdict) << '\n';
      }
      return 0;
    }
  } catch (const Error& e) {
    err << "cbi: " << to_string(e.kind()) << ": " << e.what() << '\n';
    if (!e.trace().empty()) {
      err << "cbi: trace";
      for (double v : e.trace()) err << ' ' << num12(v);
      err << '\n';
    }
    if (e.kind() == ErrorKind::HypothesisMismatch) return exit_hypothesis;
    if (e.kind() == ErrorKind::InvalidArgument) return exit_usage;
    return exit_numeric;
  } catch (const std::exception& e) {
    err << "cbi: " << e.what() << '\n';
    return exit_numeric;
  }
  return exit_usage;
}

}  // namespace cbi::cli
