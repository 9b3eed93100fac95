#include "cli/scenario_io.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "cbi/error.hpp"

namespace cbi::cli {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::InvalidArgument, "scenario: " + what); }

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) bad(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) bad("unknown key '" + it.key() + "' in " + where);
  }
}

double num(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) bad("missing '" + std::string(key) + "' in " + where);
  const json& v = j.at(key);
  if (!v.is_number()) bad("'" + std::string(key) + "' in " + where + " must be a number");
  return v.get<double>();
}

double num_or(const json& j, const char* key, double fallback, const std::string& where) {
  return j.contains(key) ? num(j, key, where) : fallback;
}

std::string kind_of(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) bad(where + " needs a string 'kind'");
  return j.at("kind").get<std::string>();
}

}  // namespace

TailFunction tail_from_json(const json& j) {
  if (j.is_string()) return tail_from_json(json{{"kind", j.get<std::string>()}});
  std::string k = kind_of(j, "tail");
  if (k == "zero") {
    only_keys(j, "tail", {"kind"});
    return TailFunction::zero();
  }
  if (k == "one_over_log") {
    only_keys(j, "tail", {"kind"});
    return TailFunction::one_over_log();
  }
  if (k == "one_over_log_loglog") {
    only_keys(j, "tail", {"kind"});
    return TailFunction::one_over_log_loglog();
  }
  if (k == "c_over_log") {
    only_keys(j, "tail", {"kind", "c"});
    return TailFunction::c_over_log(num(j, "c", "c_over_log tail"));
  }
  if (k == "exponential") {
    only_keys(j, "tail", {"kind", "mass", "rate"});
    return TailFunction::exponential(num(j, "mass", "exponential tail"), num(j, "rate", "exponential tail"));
  }
  if (k == "power_law") {
    only_keys(j, "tail", {"kind", "coef", "index"});
    return TailFunction::power_law(num(j, "coef", "power_law tail"), num(j, "index", "power_law tail"));
  }
  if (k == "table") {
    only_keys(j, "tail", {"kind", "points"});
    if (!j.contains("points") || !j.at("points").is_array()) bad("table tail needs an array 'points'");
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : j.at("points")) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
        bad("table points must be [x, tail] pairs");
      pts.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    return TailFunction::table(std::move(pts));
  }
  bad("unknown tail kind '" + k + "'");
}

json tail_to_json(const TailFunction& t) {
  json j{{"kind", t.name()}};
  switch (t.kind()) {
    case TailFunction::Kind::COverLog: j["c"] = t.c(); break;
    case TailFunction::Kind::Exponential:
      j["mass"] = t.c();
      j["rate"] = t.rate();
      break;
    case TailFunction::Kind::PowerLaw:
      j["coef"] = t.c();
      j["index"] = t.rate();
      break;
    case TailFunction::Kind::Table: {
      json pts = json::array();
      for (auto [x, v] : t.points()) pts.push_back({x, v});
      j["points"] = pts;
      break;
    }
    default: break;
  }
  return j;
}

BranchingMechanism psi_from_json(const json& j) {
  std::string k = kind_of(j, "psi");
  if (k == "stable") {
    only_keys(j, "psi", {"kind", "d", "alpha"});
    return BranchingMechanism::stable(num(j, "d", "psi"), num(j, "alpha", "psi"));
  }
  if (k == "quadratic") {
    only_keys(j, "psi", {"kind", "b", "sigma"});
    return BranchingMechanism::quadratic(num(j, "b", "psi"), num(j, "sigma", "psi"));
  }
  if (k == "logistic") {
    only_keys(j, "psi", {"kind"});
    return BranchingMechanism::logistic();
  }
  if (k == "general") {
    only_keys(j, "psi", {"kind", "b", "sigma", "pi"});
    if (!j.contains("pi")) bad("general psi needs 'pi'");
    return BranchingMechanism::general(num(j, "b", "psi"), num_or(j, "sigma", 0.0, "psi"), tail_from_json(j.at("pi")));
  }
  bad("unknown psi kind '" + k + "'");
}

json psi_to_json(const BranchingMechanism& psi) {
  if (auto* s = psi.as<StableBranching>()) return {{"kind", "stable"}, {"d", s->d}, {"alpha", s->alpha}};
  if (auto* q = psi.as<QuadraticBranching>()) return {{"kind", "quadratic"}, {"b", q->b}, {"sigma", q->sigma}};
  if (psi.as<LogisticBranching>()) return {{"kind", "logistic"}};
  const auto& g = *psi.as<GeneralBranching>();
  return {{"kind", "general"}, {"b", g.b}, {"sigma", g.sigma}, {"pi", tail_to_json(g.pi_tail)}};
}

ImmigrationMechanism phi_from_json(const json& j) {
  std::string k = kind_of(j, "phi");
  if (k == "stable") {
    only_keys(j, "phi", {"kind", "d_prime", "beta_idx"});
    return ImmigrationMechanism::stable(num(j, "d_prime", "phi"), num(j, "beta_idx", "phi"));
  }
  if (k == "linear") {
    only_keys(j, "phi", {"kind", "beta0"});
    return ImmigrationMechanism::linear(num(j, "beta0", "phi"));
  }
  if (k == "tail") {
    only_keys(j, "phi", {"kind", "beta0", "nu_bar"});
    if (!j.contains("nu_bar")) bad("tail phi needs 'nu_bar'");
    return ImmigrationMechanism::tail(num_or(j, "beta0", 0.0, "phi"), tail_from_json(j.at("nu_bar")));
  }
  bad("unknown phi kind '" + k + "'");
}

json phi_to_json(const ImmigrationMechanism& phi) {
  if (auto* s = phi.as<StableImmigration>()) return {{"kind", "stable"}, {"d_prime", s->d_prime}, {"beta_idx", s->beta_idx}};
  if (auto* l = phi.as<LinearImmigration>()) return {{"kind", "linear"}, {"beta0", l->beta0}};
  const auto& t = *phi.as<TailImmigration>();
  return {{"kind", "tail"}, {"beta0", t.beta0}, {"nu_bar", tail_to_json(t.nu_bar)}};
}

Scenario scenario_from_json(const json& j) {
  only_keys(j, "scenario", {"psi", "phi", "x0", "lambda0", "quadrature", "regime"});
  if (!j.contains("psi") || !j.contains("phi")) bad("scenario needs 'psi' and 'phi'");
  Scenario sc;
  sc.psi = psi_from_json(j.at("psi"));
  sc.phi = phi_from_json(j.at("phi"));
  sc.x0 = num_or(j, "x0", 0.0, "scenario");
  if (!(sc.x0 >= 0.0)) bad("x0 must be >= 0");
  if (j.contains("lambda0") && !j.at("lambda0").is_null()) {
    sc.lambda0 = num(j, "lambda0", "scenario");
    if (!(sc.lambda0 > 0.0)) bad("lambda0 must be > 0");
  }
  if (j.contains("quadrature")) {
    const json& q = j.at("quadrature");
    only_keys(q, "quadrature", {"rel_tol", "abs_tol"});
    sc.rel_tol = num_or(q, "rel_tol", sc.rel_tol, "quadrature");
    sc.abs_tol = num_or(q, "abs_tol", sc.abs_tol, "quadrature");
  }
  if (j.contains("regime")) {
    const json& r = j.at("regime");
    only_keys(r, "regime", {"s_threshold", "l_spread", "f_threshold"});
    sc.s_threshold = num_or(r, "s_threshold", sc.s_threshold, "regime");
    sc.l_spread = num_or(r, "l_spread", sc.l_spread, "regime");
    sc.f_threshold = num_or(r, "f_threshold", sc.f_threshold, "regime");
  }
  return sc;
}

json scenario_to_json(const Scenario& sc) {
  json j;
  j["psi"] = psi_to_json(sc.psi);
  j["phi"] = phi_to_json(sc.phi);
  j["x0"] = sc.x0;
  j["lambda0"] = std::isnan(sc.lambda0) ? json(nullptr) : json(sc.lambda0);
  j["quadrature"] = {{"rel_tol", sc.rel_tol}, {"abs_tol", sc.abs_tol}};
  j["regime"] = {{"s_threshold", sc.s_threshold}, {"l_spread", sc.l_spread}, {"f_threshold", sc.f_threshold}};
  return j;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    bad(std::string("malformed JSON: ") + e.what());
  }
  return scenario_from_json(j);
}

std::uint64_t scenario_fingerprint(const Scenario& sc) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : scenario_to_json(sc).dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

}  // namespace cbi::cli
