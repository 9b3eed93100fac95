#pragma once

#include <string>
#include <utility>
#include <vector>

namespace cbi {

// Tail function x ↦ μ([x, ∞)) of a Lévy measure μ on (0, ∞). Used both for
// the immigration measure ν and for the branching measure π.
class TailFunction {
 public:
  enum class Kind { Zero, OneOverLog, OneOverLogLogLog, COverLog, Exponential, Table, PowerLaw };

  TailFunction() = default;

  static TailFunction zero();
  // min(1, 1/ln x)
  static TailFunction one_over_log();
  // min(1, 1/(ln x · ln ln x)), capped where s ln s = 1 with s = ln x
  static TailFunction one_over_log_loglog();
  // c · min(1, 1/ln x)
  static TailFunction c_over_log(double c);
  // mass · e^{-rate x}
  static TailFunction exponential(double mass, double rate);
  // Atoms at x_i; pairs are (x_i, tail value at x_i), x increasing, tail nonincreasing.
  static TailFunction table(std::vector<std::pair<double, double>> points);
  // coef · x^{-index}; infinite mass
  static TailFunction power_law(double coef, double index);

  Kind kind() const { return kind_; }
  const std::string& name() const;
  double c() const { return p0_; }
  double rate() const { return p1_; }
  const std::vector<std::pair<double, double>>& points() const { return pts_; }

  double operator()(double x) const;
  // Tail evaluated at e^s; stays finite for s far beyond the double range of e^s.
  double at_log(double s) const;
  double mass() const;

  // ln-abscissae where the tail is not smooth
  std::vector<double> log_breaks() const;
  // ln x beyond which the tail is (numerically) zero; +inf when unbounded
  double log_support_end() const;

  // ∫_1^∞ μ̄(u)/u du < ∞, i.e. ∫ ln(z) μ(dz) < ∞ near infinity
  bool log_moment_finite() const;
  bool first_moment_finite() const;

  double moment1_above(double eps) const;  // ∫_{[eps,∞)} z μ(dz)
  double moment1_below(double eps) const;  // ∫_{(0,eps)} z μ(dz)
  double moment2_below(double eps) const;  // ∫_{(0,eps)} z² μ(dz)

  // ln J for a jump J drawn from μ restricted to [eps, ∞), by inversion of u ∈ (0,1).
  double sample_log_above(double eps, double u) const;

 private:
  Kind kind_ = Kind::Zero;
  double p0_ = 0.0;
  double p1_ = 0.0;
  std::vector<std::pair<double, double>> pts_;
  double flat_end_log() const;
};

}  // namespace cbi
