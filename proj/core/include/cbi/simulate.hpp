#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cbi/mechanisms.hpp"

namespace cbi {

// Explicit jump-Euler step; `substeps` > 1 builds each Brownian increment
// from that many finer draws, so runs with dt and dt/m share noise.
struct EulerJump {
  double dt = 1e-3;
  double eps_trunc = 1e-4;
  int substeps = 1;
};
// Exact square-root-diffusion transition, plus exact compound-Poisson immigration.
struct ExactQuadratic {};
// Per step: exact immigration increment, then exact (quadratic) or
// stable-increment branching transition.
struct SplitStep {
  double dt = 0.1;
};

using Scheme = std::variant<EulerJump, ExactQuadratic, SplitStep>;

std::string scheme_name(const Scheme& s);
bool exact_admissible(const BranchingMechanism& psi, const ImmigrationMechanism& phi);
bool split_admissible(const BranchingMechanism& psi, const ImmigrationMechanism& phi);
// Exact when admissible, then split, then Euler with dt = 1e-3.
Scheme default_scheme(const BranchingMechanism& psi, const ImmigrationMechanism& phi);

struct SimConfig {
  BranchingMechanism psi;
  ImmigrationMechanism phi;
  double x0 = 0.0;
  double horizon = 1.0;
  Scheme scheme = ExactQuadratic{};
  std::uint64_t seed = 0;
  std::size_t n_paths = 1;
};

struct Ensemble {
  std::vector<double> terminal_values;  // may hold +inf when ln Y exceeds the double range
  std::vector<double> log_values;       // ln Y, −inf for Y = 0
  double t = 0.0;
  std::uint64_t fingerprint = 0;
  std::string scheme;
  std::vector<std::uint64_t> path_seeds;
  std::size_t size() const { return terminal_values.size(); }
};

std::uint64_t fingerprint(const SimConfig& cfg);
// Worker count from CBI_THREADS, else the hardware default.
std::size_t worker_count();

Ensemble simulate_ensemble(const SimConfig& cfg);
Ensemble simulate_subordinator(const ImmigrationMechanism& phi, double horizon, std::uint64_t seed,
                               std::size_t n_paths);

struct MartingalePoint {
  double t = 0.0;
  double mean = 0.0;
  double stderr_ = 0.0;
  double kappa = 1.0;
  double v_back = 0.0;  // v_{-t}(λ)
};

// Means of κ_λ(t)·exp(−v_{-t}(λ) Y_t), one independent ensemble per time.
std::vector<MartingalePoint> martingale_check(const SimConfig& cfg, double lambda, std::span<const double> times);

}  // namespace cbi
