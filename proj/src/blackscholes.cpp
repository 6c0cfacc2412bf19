#include "fwdsmile/blackscholes.hpp"

#include <algorithm>
#include <limits>

namespace fwdsmile::bs {

namespace {

constexpr double kSqrt2Pi = 2.50662827463100050242;
constexpr int kMaxIterations = 100;

double total_vol_or_throw(const BsInputs& in) {
  const double w = in.total_vol();
  if (!(w > 0.0)) {
    throw DegenerateVolError("sigma * sqrt(tau) must be positive");
  }
  return w;
}

double d_plus(const BsInputs& in, double w) {
  return (in.log_spot() - std::log(in.strike()) + in.rate() * in.tau()) / w + 0.5 * w;
}

// Corrado-Miller quadratic approximation, falling back to the ATM
// Brenner-Subrahmanyam guess when the discriminant goes negative.
double initial_guess(double price, double spot, double disc_strike, double tau) {
  const double half_gap = 0.5 * (spot - disc_strike);
  const double a = price - half_gap;
  const double disc = a * a - (spot - disc_strike) * (spot - disc_strike) / M_PI;
  double w = kSqrt2Pi / (spot + disc_strike) * (a + std::sqrt(std::max(disc, 0.0)));
  if (!(w > 0.0) || !std::isfinite(w)) {
    w = kSqrt2Pi * price / spot;
  }
  return w / std::sqrt(tau);
}

}  // namespace

BsInputs::BsInputs(double time_to_maturity, double log_spot, double strike, double vol,
                   double rate)
    : tau_(time_to_maturity), log_spot_(log_spot), strike_(strike), vol_(vol), rate_(rate) {
  if (std::isnan(tau_) || std::isnan(log_spot_) || std::isnan(strike_) || std::isnan(vol_) ||
      std::isnan(rate_)) {
    throw std::invalid_argument("BsInputs: NaN input");
  }
  if (tau_ < 0.0) throw std::invalid_argument("BsInputs: time to maturity must be >= 0");
  if (!(strike_ > 0.0)) throw std::invalid_argument("BsInputs: strike must be > 0");
  if (vol_ < 0.0) throw std::invalid_argument("BsInputs: vol must be >= 0");
}

double BsInputs::intrinsic() const {
  return std::max(std::exp(log_spot_) - discounted_strike(), 0.0);
}

double call(const BsInputs& in) {
  const double w = in.total_vol();
  if (w == 0.0) return in.intrinsic();
  const double dp = d_plus(in, w);
  const double price =
      std::exp(in.log_spot()) * norm_cdf(dp) - in.discounted_strike() * norm_cdf(dp - w);
  return std::max(price, in.intrinsic());
}

std::pair<double, double> d_plus_minus(const BsInputs& in) {
  const double w = total_vol_or_throw(in);
  const double dp = d_plus(in, w);
  return {dp, dp - w};
}

double vega(const BsInputs& in) {
  const double w = total_vol_or_throw(in);
  return std::exp(in.log_spot()) * norm_pdf(d_plus(in, w)) * std::sqrt(in.tau());
}

double g_function(const BsInputs& in) {
  const double w = total_vol_or_throw(in);
  return std::exp(in.log_spot()) * norm_pdf(d_plus(in, w)) / w;
}

double h_function(const BsInputs& in) {
  const double w = total_vol_or_throw(in);
  const double dp = d_plus(in, w);
  const double g = std::exp(in.log_spot()) * norm_pdf(dp) / w;
  return g * (1.0 - dp / w);
}

double dk_call(const BsInputs& in) {
  const double w = total_vol_or_throw(in);
  return -in.discounted_strike() * norm_cdf(d_plus(in, w) - w);
}

double dkk_call(const BsInputs& in) {
  const double w = total_vol_or_throw(in);
  const double dm = d_plus(in, w) - w;
  return in.discounted_strike() * (norm_pdf(dm) / w - norm_cdf(dm));
}

double dk_g(const BsInputs& in) {
  const double w = total_vol_or_throw(in);
  const double dp = d_plus(in, w);
  return std::exp(in.log_spot()) * norm_pdf(dp) / w * dp / w;
}

double dkk_g(const BsInputs& in) {
  const double w = total_vol_or_throw(in);
  const double dp = d_plus(in, w);
  return std::exp(in.log_spot()) * norm_pdf(dp) / w * (dp * dp - 1.0) / (w * w);
}

double forward_start_price(double x_t, double s, double maturity, double alpha, double vol,
                           double rate) {
  if (!(s < maturity)) {
    throw std::invalid_argument("forward_start_price: requires s < T");
  }
  return std::exp(x_t) * call(BsInputs(maturity - s, 0.0, std::exp(alpha), vol, rate));
}

ImpliedVolResult implied_vol(double target_price, double tau, double log_spot, double strike,
                             double rate) {
  if (!std::isfinite(target_price)) {
    throw ImpliedVolError(ImpliedVolError::Kind::BadInput, "implied_vol: non-finite target");
  }
  const BsInputs base(tau, log_spot, strike, 0.0, rate);
  const double spot = std::exp(log_spot);
  const double intrinsic = base.intrinsic();

  if (target_price >= spot) {
    throw ImpliedVolError(ImpliedVolError::Kind::NoSolution,
                          "implied_vol: price at or above the spot upper bound");
  }
  if (target_price <= intrinsic) {
    return {0.0, 0, true};
  }
  if (tau == 0.0) {
    throw ImpliedVolError(ImpliedVolError::Kind::NoSolution,
                          "implied_vol: zero maturity with time value");
  }

  auto price_at = [&](double v) { return call(base.with_vol(v)); };

  double lo = 0.0;
  double hi = 1.0;
  while (price_at(hi) < target_price) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e8) {
      throw ImpliedVolError(ImpliedVolError::Kind::NotConverged,
                            "implied_vol: could not bracket target", lo, hi);
    }
  }

  double vol = initial_guess(target_price, spot, base.discounted_strike(), tau);
  if (!(vol > lo && vol < hi)) vol = 0.5 * (lo + hi);

  const double abs_tol = 1e-12 * spot;
  int iter = 0;
  bool converged = false;
  for (; iter < kMaxIterations; ++iter) {
    const double diff = price_at(vol) - target_price;
    if (diff == 0.0) {
      converged = true;
      break;
    }
    if (diff > 0.0) {
      hi = vol;
    } else {
      lo = vol;
    }
    const double v = vega(base.with_vol(vol));
    double next = 0.5 * (lo + hi);
    if (v > 0.0) {
      const double newton = vol - diff / v;
      if (newton > lo && newton < hi) next = newton;
    }
    const double step = std::abs(next - vol);
    vol = next;
    if (step <= 4.0 * std::numeric_limits<double>::epsilon() * vol ||
        hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
      converged = true;
      break;
    }
  }

  if (!converged && std::abs(price_at(vol) - target_price) > abs_tol) {
    throw ImpliedVolError(ImpliedVolError::Kind::NotConverged,
                          "implied_vol: no convergence within iteration cap", lo, hi);
  }
  return {vol, iter + 1, false};
}

}  // namespace fwdsmile::bs
