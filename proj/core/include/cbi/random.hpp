#pragma once

#include <cstdint>
#include <random>

namespace cbi::rng {

using Engine = std::mt19937_64;

// Seed of path k under master seed s (splitmix64 mixing of both).
std::uint64_t path_seed(std::uint64_t master, std::uint64_t k);

// Per-path generator state; owns the distribution objects so draws are a
// pure function of the path seed.
struct Stream {
  explicit Stream(std::uint64_t seed);

  Engine eng;
  std::normal_distribution<double> normal{0.0, 1.0};

  double uniform();  // in (0, 1)
  double exponential();
  double gaussian() { return normal(eng); }
  std::uint64_t poisson(double mean);
  double gamma(double shape);
};

// E e^{-qS} = exp(−q^a), 0 < a < 1
double stable_positive(double a, Stream& s);
// E e^{-qS} = exp(q^a), 1 < a < 2 (spectrally positive, zero mean)
double stable_spectrally_positive(double a, Stream& s);

// Exact transition of dY = (β₀ − bY)dt + σ√Y dB over time t from Y_0 = x,
// via the noncentral chi-square law (Poisson mixture of gammas).
double cir_transition(double x, double beta0, double b, double sigma, double t, Stream& s);

}  // namespace cbi::rng
