#include "fwdsmile/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace fwdsmile::models {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool finite_all(std::initializer_list<double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

void OuParams::validate() const {
  if (!finite_all({kappa, m, lambda, y0})) throw std::invalid_argument("OuParams: non-finite value");
  if (!(kappa > 0.0)) throw std::invalid_argument("OuParams: kappa must be > 0");
  if (!(lambda >= 0.0)) throw std::invalid_argument("OuParams: lambda must be >= 0");
}

VolFunction VolFunction::identity() { return {Kind::Identity, 0.0, 0.0, 0.0}; }

VolFunction VolFunction::abs_clamped(double sigma_min, double sigma_max) {
  if (!(sigma_min > 0.0) || !(sigma_max >= sigma_min) || !std::isfinite(sigma_max)) {
    throw std::invalid_argument("VolFunction: need 0 < sigma_min <= sigma_max < inf");
  }
  return {Kind::AbsClamped, 0.0, sigma_min, sigma_max};
}

VolFunction VolFunction::smoothed_abs(double eps, double sigma_min, double sigma_max) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("VolFunction: eps must be > 0");
  if (!(sigma_min > 0.0) || !(sigma_max >= sigma_min) || !std::isfinite(sigma_max)) {
    throw std::invalid_argument("VolFunction: need 0 < sigma_min <= sigma_max < inf");
  }
  return {Kind::SmoothedAbs, eps, sigma_min, sigma_max};
}

VolFunction VolFunction::make_default() { return smoothed_abs(1e-3, 0.01, 2.0); }

double VolFunction::raw(double y) const {
  switch (kind_) {
    case Kind::Identity:
      return y;
    case Kind::AbsClamped:
      return std::abs(y);
    case Kind::SmoothedAbs:
      return std::hypot(y, eps_);
  }
  return y;
}

double VolFunction::value(double y) const {
  if (kind_ == Kind::Identity) return y;
  return std::clamp(raw(y), sigma_min_, sigma_max_);
}

bool VolFunction::is_clamped(double y) const {
  if (kind_ == Kind::Identity) return false;
  const double r = raw(y);
  return r <= sigma_min_ || r >= sigma_max_;
}

double VolFunction::derivative(double y) const {
  switch (kind_) {
    case Kind::Identity:
      return 1.0;
    case Kind::AbsClamped:
      if (is_clamped(y)) return 0.0;
      return y > 0.0 ? 1.0 : -1.0;
    case Kind::SmoothedAbs:
      if (is_clamped(y)) return 0.0;
      return y / std::hypot(y, eps_);
  }
  return 0.0;
}

std::vector<double> VolFunction::breakpoints() const {
  std::vector<double> out;
  switch (kind_) {
    case Kind::Identity:
      break;
    case Kind::AbsClamped:
      out = {-sigma_max_, -sigma_min_, sigma_min_, sigma_max_};
      break;
    case Kind::SmoothedAbs: {
      const double lo = sigma_min_ > eps_ ? std::sqrt(sigma_min_ * sigma_min_ - eps_ * eps_) : 0.0;
      const double hi = std::sqrt(sigma_max_ * sigma_max_ - eps_ * eps_);
      out = {-hi, -lo, lo, hi};
      break;
    }
  }
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string VolFunction::describe() const {
  switch (kind_) {
    case Kind::Identity:
      return "identity";
    case Kind::AbsClamped:
      return "abs_clamped(" + fmt_double(sigma_min_) + "," + fmt_double(sigma_max_) + ")";
    case Kind::SmoothedAbs:
      return "smoothed_abs(" + fmt_double(eps_) + "," + fmt_double(sigma_min_) + "," +
             fmt_double(sigma_max_) + ")";
  }
  return "?";
}

void ModelSpec::validate() const {
  if (!finite_all({rate, rho, x0})) throw std::invalid_argument("ModelSpec: non-finite value");
  if (std::abs(rho) > 1.0) throw std::invalid_argument("ModelSpec: |rho| must be <= 1");
  if (const auto* cv = std::get_if<ConstantVol>(&vol)) {
    if (!(cv->sigma > 0.0) || !std::isfinite(cv->sigma)) {
      throw std::invalid_argument("ModelSpec: constant sigma must be > 0");
    }
  } else {
    std::get<ExtendedSteinStein>(vol).ou.validate();
  }
}

double ModelSpec::initial_factor() const {
  if (const auto* cv = std::get_if<ConstantVol>(&vol)) return cv->sigma;
  return std::get<ExtendedSteinStein>(vol).ou.y0;
}

double ModelSpec::sigma_of(double y) const {
  if (const auto* ss = stein_stein()) return ss->f.value(y);
  return std::get<ConstantVol>(vol).sigma;
}

double ModelSpec::sigma_prime_of(double y) const {
  if (const auto* ss = stein_stein()) return ss->f.derivative(y);
  return 0.0;
}

std::string ModelSpec::canonical() const {
  std::string out = "rate=" + fmt_double(rate) + ";rho=" + fmt_double(rho) + ";x0=" + fmt_double(x0);
  if (const auto* cv = std::get_if<ConstantVol>(&vol)) {
    out += ";constant(" + fmt_double(cv->sigma) + ")";
  } else {
    const auto& ss = std::get<ExtendedSteinStein>(vol);
    out += ";stein_stein(kappa=" + fmt_double(ss.ou.kappa) + ",m=" + fmt_double(ss.ou.m) +
           ",lambda=" + fmt_double(ss.ou.lambda) + ",y0=" + fmt_double(ss.ou.y0) +
           ",f=" + ss.f.describe() + ")";
  }
  return out;
}

double ou_mean(const OuParams& p, double y, double t, double s) {
  if (s < t) throw std::invalid_argument("ou_mean: requires s >= t");
  const double decay = std::exp(-p.kappa * (s - t));
  return y * decay + p.m * (1.0 - decay);
}

double ou_variance(const OuParams& p, double t, double s) {
  if (s < t) throw std::invalid_argument("ou_variance: requires s >= t");
  return p.lambda * p.lambda * (-std::expm1(-2.0 * p.kappa * (s - t))) / (2.0 * p.kappa);
}

double malliavin_d_y(const OuParams& p, double u, double s) {
  if (u > s) throw std::invalid_argument("malliavin_d_y: requires u <= s");
  return p.lambda * std::exp(-p.kappa * (s - u));
}

double malliavin_d_sigma_sq(const ModelSpec& model, double y_s, double u, double s) {
  const auto* ss = model.stein_stein();
  if (ss == nullptr) return 0.0;
  return 2.0 * ss->f.value(y_s) * ss->f.derivative(y_s) * malliavin_d_y(ss->ou, u, s);
}

double sigma_bar_sq(const ModelSpec& model, double y_s) {
  const auto* ss = model.stein_stein();
  if (ss == nullptr) return 0.0;
  return 2.0 * ss->ou.lambda * ss->f.value(y_s) * ss->f.derivative(y_s);
}

double skew_quotient(const ModelSpec& model, double y_s) {
  const auto* ss = model.stein_stein();
  if (ss == nullptr) return 0.0;
  return 2.0 * ss->ou.lambda * ss->f.derivative(y_s) / ss->f.value(y_s);
}

unsigned long long fnv1a(const std::string& text) {
  unsigned long long h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace fwdsmile::models
