#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cbi/limit_laws.hpp"
#include "cbi/simulate.hpp"

namespace cbi {

struct LtPoint {
  double theta = 0.0;
  double mean = 0.0;
  double stderr_ = 0.0;
};

std::vector<LtPoint> empirical_lt(std::span<const double> values, std::span<const double> thetas);
std::vector<LtPoint> empirical_lt(const Ensemble& ens, std::span<const double> thetas);

// sup |F_emp − F| over the sorted sample; +inf samples count as mass at infinity
double ks_distance(std::vector<double> samples, const LimitLaw& law);

struct DiagnosticRow {
  std::string probe;
  double empirical = 0.0;
  double analytic = 0.0;
  double stderr_ = 0.0;
};

struct VerificationVerdict {
  std::string theorem_id;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;          // statistic ≤ threshold
  bool trend_ok = true;       // statistic nonincreasing across t_list
  bool auxiliary_ok = true;   // theorem-specific side condition (ratio symmetry)
  std::vector<double> t_list;
  std::vector<double> per_t;  // statistic at each t
  std::vector<DiagnosticRow> diagnostics;
  std::string scheme;
  std::uint64_t fingerprint = 0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;

  bool accepted() const { return pass && trend_ok && auxiliary_ok; }
};

// main_exp_limit, ratio, regime_S, regime_L, regime_F, critical_L, critical_F, subordinator
const std::vector<std::string>& theorem_ids();

struct VerifyOptions {
  std::optional<Scheme> scheme;
  std::optional<double> threshold;
};

VerificationVerdict verify_theorem(const Scenario& sc, const std::string& theorem_id, std::span<const double> t_list,
                                   std::size_t n_paths, std::uint64_t seed, const VerifyOptions& opt = {});

// LT error of Y_t (b ≥ 0) or of v_{-t}(λ₀)Y_t (b < 0) against the limit law, probes θ ∈ {0.5, 1, 2}
VerificationVerdict stationary_check(const Scenario& sc, double t, std::size_t n_paths, std::uint64_t seed,
                                     const VerifyOptions& opt = {});

}  // namespace cbi
