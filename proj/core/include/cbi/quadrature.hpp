#pragma once

#include <functional>
#include <span>

namespace cbi::quad {

struct Options {
  double rel_tol = 1e-8;
  double abs_tol = 1e-12;
  unsigned max_depth = 18;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
};

using Fn = std::function<double(double)>;

// Adaptive Gauss-Kronrod 7/15 on a finite interval. a > b is allowed and
// flips the sign.
Result integrate(const Fn& f, double a, double b, const Options& opt = {});

// Sum of per-panel integrals over consecutive edges (must be sorted).
Result integrate_panels(const Fn& f, std::span<const double> edges, const Options& opt = {});

// Integral over [lo, hi] split into panels of width at most `width`, with
// extra edges at `breaks` (values outside the range are ignored).
Result integrate_split(const Fn& f, double lo, double hi, double width,
                       std::span<const double> breaks = {}, const Options& opt = {});

// ∫_a^b f(u) du for 0 < a, b, computed in s = ln u on geometric panels.
Result integrate_geometric(const Fn& f, double a, double b, const Options& opt = {},
                           double panels_per_decade = 1.0);

}  // namespace cbi::quad
