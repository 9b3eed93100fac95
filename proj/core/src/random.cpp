#include "cbi/random.hpp"

#include <cmath>
#include <numbers>

namespace cbi::rng {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Chambers-Mallows-Stuck with skewness 1, rescaled to unit Laplace exponent.
double cms_skewed(double a, Stream& s) {
  const double pi = std::numbers::pi;
  double v = pi * (s.uniform() - 0.5);
  double w = s.exponential();
  double t = std::tan(pi * a / 2.0);
  double b = std::atan(t) / a;
  double sc = std::pow(1.0 + t * t, 1.0 / (2.0 * a));
  double x = sc * std::sin(a * (v + b)) / std::pow(std::cos(v), 1.0 / a) *
             std::pow(std::cos(v - a * (v + b)) / w, (1.0 - a) / a);
  return x * std::pow(std::abs(std::cos(pi * a / 2.0)), 1.0 / a);
}

}  // namespace

std::uint64_t path_seed(std::uint64_t master, std::uint64_t k) { return splitmix64(master ^ splitmix64(k + 1)); }

Stream::Stream(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  eng.seed(seq);
}

double Stream::uniform() {
  // 53-bit mantissa, strictly inside (0, 1)
  return (static_cast<double>(eng() >> 11) + 0.5) * 0x1.0p-53;
}

double Stream::exponential() { return -std::log(uniform()); }

std::uint64_t Stream::poisson(double mean) {
  if (mean <= 0.0) return 0;
  if (mean > 1e12) {
    double v = std::round(mean + std::sqrt(mean) * gaussian());
    return v < 0.0 ? 0 : static_cast<std::uint64_t>(v);
  }
  std::poisson_distribution<std::uint64_t> d(mean);
  return d(eng);
}

double Stream::gamma(double shape) {
  std::gamma_distribution<double> d(shape, 1.0);
  return d(eng);
}

double stable_positive(double a, Stream& s) { return cms_skewed(a, s); }

double stable_spectrally_positive(double a, Stream& s) { return cms_skewed(a, s); }

double cir_transition(double x, double beta0, double b, double sigma, double t, Stream& s) {
  // (1 − e^{-bt}) / b, → t as b → 0
  double k = b != 0.0 ? -std::expm1(-b * t) / b : t;
  double decay = std::exp(-b * t);
  if (sigma == 0.0) return x * decay + beta0 * k;
  double c = sigma * sigma * k / 4.0;
  double df = 4.0 * beta0 / (sigma * sigma);
  double nc = x * decay / c;
  double n = static_cast<double>(s.poisson(nc / 2.0));
  double shape = df / 2.0 + n;
  if (shape <= 0.0) return 0.0;
  return 2.0 * c * s.gamma(shape);
}

}  // namespace cbi::rng
