#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace fwdsmile::bs {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

/// Standard normal CDF, erfc-based so the lower tail keeps full relative accuracy.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

inline double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

/// Thrown when a quantity needs sigma * sqrt(tau) > 0.
class DegenerateVolError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Call-option inputs in log-spot form. Validated on construction.
class BsInputs {
 public:
  BsInputs(double time_to_maturity, double log_spot, double strike, double vol, double rate);

  double tau() const { return tau_; }
  double log_spot() const { return log_spot_; }
  double strike() const { return strike_; }
  double vol() const { return vol_; }
  double rate() const { return rate_; }

  BsInputs with_vol(double vol) const { return {tau_, log_spot_, strike_, vol, rate_}; }
  BsInputs with_log_spot(double x) const { return {tau_, x, strike_, vol_, rate_}; }
  BsInputs with_strike(double k) const { return {tau_, log_spot_, k, vol_, rate_}; }

  double total_vol() const { return vol_ * std::sqrt(tau_); }
  double discounted_strike() const { return strike_ * std::exp(-rate_ * tau_); }
  /// (e^x - K e^{-r tau})_+
  double intrinsic() const;

 private:
  double tau_;
  double log_spot_;
  double strike_;
  double vol_;
  double rate_;
};

/// e^x N(d+) - K e^{-r tau} N(d-). Returns intrinsic value when sigma or tau is zero.
double call(const BsInputs& in);

/// (d+, d-). Throws DegenerateVolError when sigma * sqrt(tau) == 0.
std::pair<double, double> d_plus_minus(const BsInputs& in);

/// dBS/dsigma = e^x N'(d+) sqrt(tau).
double vega(const BsInputs& in);

/// G = (d_xx - d_x) BS = e^x N'(d+) / (sigma sqrt(tau)).
double g_function(const BsInputs& in);

/// H = d_x G = G (1 - d+ / (sigma sqrt(tau))).
double h_function(const BsInputs& in);

// Derivatives in the log-strike k = ln K.
double dk_call(const BsInputs& in);
double dkk_call(const BsInputs& in);
double dk_g(const BsInputs& in);
double dkk_g(const BsInputs& in);

/// Constant-vol Type-II forward-start call: e^{x_t} BS(tau = T - s, x = 0, K = e^alpha).
double forward_start_price(double x_t, double s, double maturity, double alpha, double vol,
                           double rate);

struct ImpliedVolResult {
  double vol = 0.0;
  int iterations = 0;
  /// Target at or below intrinsic value; vol pinned to zero.
  bool at_lower_bound = false;
};

class ImpliedVolError : public std::runtime_error {
 public:
  enum class Kind { NoSolution, NotConverged, BadInput };

  ImpliedVolError(Kind kind, const std::string& what, double bracket_lo = 0.0,
                  double bracket_hi = 0.0)
      : std::runtime_error(what), kind_(kind), lo_(bracket_lo), hi_(bracket_hi) {}

  Kind kind() const { return kind_; }
  double bracket_lo() const { return lo_; }
  double bracket_hi() const { return hi_; }

 private:
  Kind kind_;
  double lo_;
  double hi_;
};

/// Volatility sigma >= 0 with call(tau, x, K, sigma, r) == target_price.
/// Newton on vega from a Corrado-Miller start, kept inside a bisection bracket.
ImpliedVolResult implied_vol(double target_price, double tau, double log_spot, double strike,
                             double rate);

}  // namespace fwdsmile::bs
