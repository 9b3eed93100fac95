#include "cbi/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "cbi/error.hpp"

namespace cbi::quad {

namespace {

Result panel(const Fn& f, double a, double b, const Options& opt, double partial) {
  if (a == b) return {};
  double err = 0.0;
  double l1 = 0.0;
  double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, a, b, opt.max_depth, opt.rel_tol, &err, &l1);
  if (!std::isfinite(v)) {
    throw Error(ErrorKind::QuadratureFailure,
                "non-finite integral on [" + std::to_string(a) + ", " + std::to_string(b) + "]",
                {a, b, partial});
  }
  return {v, err};
}

}  // namespace

Result integrate(const Fn& f, double a, double b, const Options& opt) {
  if (a > b) {
    Result r = panel(f, b, a, opt, 0.0);
    return {-r.value, r.error};
  }
  return panel(f, a, b, opt, 0.0);
}

Result integrate_panels(const Fn& f, std::span<const double> edges, const Options& opt) {
  Result total;
  std::vector<double> partials;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    try {
      Result r = panel(f, edges[i], edges[i + 1], opt, total.value);
      total.value += r.value;
      total.error += r.error;
      partials.push_back(total.value);
    } catch (const Error& e) {
      partials.push_back(std::nan(""));
      throw Error(e.kind(), e.what(), partials);
    }
  }
  return total;
}

Result integrate_split(const Fn& f, double lo, double hi, double width,
                       std::span<const double> breaks, const Options& opt) {
  if (lo == hi) return {};
  double sign = 1.0;
  if (lo > hi) {
    std::swap(lo, hi);
    sign = -1.0;
  }
  std::vector<double> edges;
  int n = std::max(1, static_cast<int>(std::ceil((hi - lo) / width)));
  n = std::min(n, 4096);
  for (int i = 0; i <= n; ++i) edges.push_back(lo + (hi - lo) * i / n);
  for (double b : breaks)
    if (b > lo && b < hi) edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  Result r = integrate_panels(f, edges, opt);
  return {sign * r.value, r.error};
}

Result integrate_geometric(const Fn& f, double a, double b, const Options& opt,
                           double panels_per_decade) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorKind::Domain, "geometric panels need positive ends");
  auto g = [&f](double s) {
    double u = std::exp(s);
    return f(u) * u;
  };
  return integrate_split(g, std::log(a), std::log(b), std::log(10.0) / panels_per_decade, {}, opt);
}

}  // namespace cbi::quad
