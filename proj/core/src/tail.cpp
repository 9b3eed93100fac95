#include "cbi/tail.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/lambert_w.hpp>

#include "cbi/error.hpp"
#include "cbi/quadrature.hpp"

namespace cbi {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

// s* with s* ln s* = 1
const double loglog_cap = std::exp(boost::math::lambert_w0(1.0));

const std::string kind_names[] = {"zero", "one_over_log", "one_over_log_loglog", "c_over_log",
                                  "exponential", "table", "power_law"};

}  // namespace

TailFunction TailFunction::zero() { return {}; }

TailFunction TailFunction::one_over_log() {
  TailFunction t;
  t.kind_ = Kind::OneOverLog;
  t.p0_ = 1.0;
  return t;
}

TailFunction TailFunction::one_over_log_loglog() {
  TailFunction t;
  t.kind_ = Kind::OneOverLogLogLog;
  t.p0_ = 1.0;
  return t;
}

TailFunction TailFunction::c_over_log(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw Error(ErrorKind::InvalidArgument, "c_over_log needs c > 0");
  TailFunction t;
  t.kind_ = Kind::COverLog;
  t.p0_ = c;
  return t;
}

TailFunction TailFunction::exponential(double mass, double rate) {
  if (!(mass > 0.0) || !(rate > 0.0)) throw Error(ErrorKind::InvalidArgument, "exponential tail needs mass, rate > 0");
  TailFunction t;
  t.kind_ = Kind::Exponential;
  t.p0_ = mass;
  t.p1_ = rate;
  return t;
}

TailFunction TailFunction::table(std::vector<std::pair<double, double>> points) {
  if (points.empty()) throw Error(ErrorKind::InvalidArgument, "empty tail table");
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto [x, v] = points[i];
    if (!(x > 0.0) || !std::isfinite(x) || !(v >= 0.0) || !std::isfinite(v))
      throw Error(ErrorKind::InvalidArgument, "tail table entries must be finite, x > 0, value >= 0");
    if (i > 0 && !(x > points[i - 1].first))
      throw Error(ErrorKind::InvalidArgument, "tail table abscissae must increase");
    if (i > 0 && v > points[i - 1].second)
      throw Error(ErrorKind::InvalidArgument, "tail table must be nonincreasing");
  }
  TailFunction t;
  t.kind_ = Kind::Table;
  t.pts_ = std::move(points);
  return t;
}

TailFunction TailFunction::power_law(double coef, double index) {
  if (!(coef > 0.0) || !(index > 0.0)) throw Error(ErrorKind::InvalidArgument, "power-law tail needs coef, index > 0");
  TailFunction t;
  t.kind_ = Kind::PowerLaw;
  t.p0_ = coef;
  t.p1_ = index;
  return t;
}

const std::string& TailFunction::name() const { return kind_names[static_cast<int>(kind_)]; }

double TailFunction::flat_end_log() const {
  switch (kind_) {
    case Kind::OneOverLog:
    case Kind::COverLog:
      return 1.0;
    case Kind::OneOverLogLogLog:
      return loglog_cap;
    default:
      return -inf;
  }
}

double TailFunction::operator()(double x) const {
  if (kind_ == Kind::Table) {
    for (const auto& [xi, vi] : pts_)
      if (xi >= x) return vi;
    return 0.0;
  }
  if (x <= 0.0) return mass();
  return at_log(std::log(x));
}

double TailFunction::at_log(double s) const {
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::OneOverLog:
      return s <= 1.0 ? 1.0 : 1.0 / s;
    case Kind::COverLog:
      return p0_ * (s <= 1.0 ? 1.0 : 1.0 / s);
    case Kind::OneOverLogLogLog:
      return s <= loglog_cap ? 1.0 : 1.0 / (s * std::log(s));
    case Kind::Exponential:
      return p0_ * std::exp(-p1_ * std::exp(s));
    case Kind::Table:
      return (*this)(std::exp(s));
    case Kind::PowerLaw:
      return p0_ * std::exp(-p1_ * s);
  }
  return 0.0;
}

double TailFunction::mass() const {
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::OneOverLog:
    case Kind::OneOverLogLogLog:
      return 1.0;
    case Kind::COverLog:
    case Kind::Exponential:
      return p0_;
    case Kind::Table:
      return pts_.front().second;
    case Kind::PowerLaw:
      return inf;
  }
  return 0.0;
}

std::vector<double> TailFunction::log_breaks() const {
  std::vector<double> out;
  if (kind_ == Kind::Table) {
    for (const auto& p : pts_) out.push_back(std::log(p.first));
  } else if (std::isfinite(flat_end_log())) {
    out.push_back(flat_end_log());
  }
  return out;
}

double TailFunction::log_support_end() const {
  switch (kind_) {
    case Kind::Zero:
      return -inf;
    case Kind::Table:
      return std::log(pts_.back().first);
    case Kind::Exponential:
      return std::log((45.0 + std::max(0.0, std::log(p0_))) / p1_);
    default:
      return inf;
  }
}

bool TailFunction::log_moment_finite() const {
  switch (kind_) {
    case Kind::OneOverLog:
    case Kind::OneOverLogLogLog:
    case Kind::COverLog:
      return false;
    default:
      return true;
  }
}

bool TailFunction::first_moment_finite() const {
  switch (kind_) {
    case Kind::Zero:
    case Kind::Exponential:
    case Kind::Table:
      return true;
    case Kind::PowerLaw:
      return p1_ > 1.0;
    default:
      return false;
  }
}

double TailFunction::moment1_above(double eps) const {
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::Exponential:
      return p0_ / p1_ * boost::math::gamma_q(2.0, p1_ * eps);
    case Kind::Table: {
      double s = 0.0;
      for (std::size_t i = 0; i < pts_.size(); ++i) {
        double next = i + 1 < pts_.size() ? pts_[i + 1].second : 0.0;
        if (pts_[i].first >= eps) s += pts_[i].first * (pts_[i].second - next);
      }
      return s;
    }
    case Kind::PowerLaw:
      if (p1_ <= 1.0) return inf;
      return p0_ * p1_ * std::pow(eps, 1.0 - p1_) / (p1_ - 1.0);
    default:
      return inf;
  }
}

double TailFunction::moment1_below(double eps) const {
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::Exponential:
      return p0_ / p1_ * boost::math::gamma_p(2.0, p1_ * eps);
    case Kind::Table: {
      double s = 0.0;
      for (std::size_t i = 0; i < pts_.size(); ++i) {
        double next = i + 1 < pts_.size() ? pts_[i + 1].second : 0.0;
        if (pts_[i].first < eps) s += pts_[i].first * (pts_[i].second - next);
      }
      return s;
    }
    case Kind::PowerLaw:
      if (p1_ >= 1.0) return inf;
      return p0_ * p1_ * std::pow(eps, 1.0 - p1_) / (1.0 - p1_);
    default: {
      double xf = std::exp(flat_end_log());
      if (eps <= xf) return 0.0;
      // ∫_0^eps (μ̄(z) − μ̄(eps)) dz, the flat part contributes xf·(mass − μ̄(eps))
      double te = (*this)(eps);
      auto f = [&](double z) { return (*this)(z) - te; };
      return xf * (mass() - te) + quad::integrate_geometric(f, xf, eps).value;
    }
  }
}

double TailFunction::moment2_below(double eps) const {
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::Exponential:
      return 2.0 * p0_ / (p1_ * p1_) * boost::math::gamma_p(3.0, p1_ * eps);
    case Kind::Table: {
      double s = 0.0;
      for (std::size_t i = 0; i < pts_.size(); ++i) {
        double next = i + 1 < pts_.size() ? pts_[i + 1].second : 0.0;
        if (pts_[i].first < eps) s += pts_[i].first * pts_[i].first * (pts_[i].second - next);
      }
      return s;
    }
    case Kind::PowerLaw:
      if (p1_ >= 2.0) return inf;
      return p0_ * p1_ * std::pow(eps, 2.0 - p1_) / (2.0 - p1_);
    default: {
      double xf = std::exp(flat_end_log());
      if (eps <= xf) return 0.0;
      double te = (*this)(eps);
      auto f = [&](double z) { return 2.0 * z * ((*this)(z) - te); };
      return xf * xf * (mass() - te) + quad::integrate_geometric(f, xf, eps).value;
    }
  }
}

double TailFunction::sample_log_above(double eps, double u) const {
  double y = u * (*this)(eps);
  switch (kind_) {
    case Kind::Zero:
      throw Error(ErrorKind::Domain, "cannot sample from a zero measure");
    case Kind::OneOverLog:
      return 1.0 / y;
    case Kind::COverLog:
      return p0_ / y;
    case Kind::OneOverLogLogLog:
      return std::exp(boost::math::lambert_w0(1.0 / y));
    case Kind::Exponential:
      return std::log(std::max(eps, 0.0) - std::log(u) / p1_);
    case Kind::PowerLaw:
      return std::log(eps) - std::log(u) / p1_;
    case Kind::Table:
      for (std::size_t i = 0; i < pts_.size(); ++i) {
        double next = i + 1 < pts_.size() ? pts_[i + 1].second : 0.0;
        if (pts_[i].first >= eps && next <= y) return std::log(pts_[i].first);
      }
      return std::log(pts_.back().first);
  }
  return 0.0;
}

}  // namespace cbi
