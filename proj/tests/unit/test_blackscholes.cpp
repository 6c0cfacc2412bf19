#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "fwdsmile/blackscholes.hpp"

namespace bs = fwdsmile::bs;

namespace {

// e^{-r tau} E[(S_T - K)_+] with S_T = e^{x + (r - sigma^2/2) tau + sigma sqrt(tau) z}, by quadrature in z.
double call_by_quadrature(double tau, double x, double k, double sigma, double r) {
  const double w = sigma * std::sqrt(tau);
  const double kink = (std::log(k) - x - (r - 0.5 * sigma * sigma) * tau) / w;
  auto payoff = [&](double z) {
    const double st = std::exp(x + (r - 0.5 * sigma * sigma) * tau + w * z);
    return std::max(st - k, 0.0) * std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  };
  const double lo = std::max(kink, -40.0);
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(payoff, lo, 40.0, 20, 1e-14, &err);
  return std::exp(-r * tau) * v;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(BsCall, TrivialLimits) {
  EXPECT_EQ(bs::call({1.0, 0.0, 1.0, 0.0, 0.0}), 0.0);
  EXPECT_NEAR(bs::call({1.0, 0.0, 1e-300, 0.2, 0.0}), 1.0, 1e-15);
  EXPECT_NEAR(bs::call({0.0, 0.3, 1.0, 0.2, 0.05}), std::exp(0.3) - 1.0, 1e-15);
}

TEST(BsCall, MatchesQuadratureOracle) {
  EXPECT_NEAR(bs::call({1.0, 0.0, 1.0, 0.2, 0.0}), call_by_quadrature(1.0, 0.0, 1.0, 0.2, 0.0), 1e-10);
  for (double tau : {0.01, 0.5, 2.0}) {
    for (double k : {0.7, 1.0, 1.4}) {
      for (double sigma : {0.05, 0.3, 1.2}) {
        const bs::BsInputs in(tau, 0.1, k, sigma, 0.03);
        EXPECT_NEAR(bs::call(in), call_by_quadrature(tau, 0.1, k, sigma, 0.03), 1e-10)
            << tau << " " << k << " " << sigma;
      }
    }
  }
}

TEST(BsCall, BoundsAndMonotoneInVol) {
  for (double k : {0.5, 1.0, 2.0}) {
    double prev = -1.0;
    for (double sigma = 0.01; sigma < 3.0; sigma += 0.01) {
      const bs::BsInputs in(0.7, 0.0, k, sigma, 0.02);
      const double c = bs::call(in);
      EXPECT_GE(c, in.intrinsic());
      EXPECT_LE(c, 1.0);
      // Strict where the price change is resolvable in double precision.
      if (bs::vega(in) * 0.01 > 1e-14) {
        EXPECT_GT(c, prev) << k << " " << sigma;
      } else {
        EXPECT_GE(c, prev) << k << " " << sigma;
      }
      prev = c;
    }
  }
}

TEST(BsCall, RejectsBadInputs) {
  EXPECT_THROW(bs::BsInputs(NAN, 0.0, 1.0, 0.2, 0.0), std::invalid_argument);
  EXPECT_THROW(bs::BsInputs(1.0, 0.0, 0.0, 0.2, 0.0), std::invalid_argument);
  EXPECT_THROW(bs::BsInputs(-1.0, 0.0, 1.0, 0.2, 0.0), std::invalid_argument);
  EXPECT_THROW(bs::BsInputs(1.0, 0.0, 1.0, -0.2, 0.0), std::invalid_argument);
}

TEST(BsGreeks, DPlusMinusAtTheMoneyForward) {
  const double tau = 0.4, sigma = 0.25, r = 0.03;
  const bs::BsInputs in(tau, std::log(1.2) - r * tau, 1.2, sigma, r);
  const auto [dp, dm] = bs::d_plus_minus(in);
  EXPECT_NEAR(dp, sigma * std::sqrt(tau) / 2.0, 1e-15);
  EXPECT_NEAR(dm, -dp, 1e-15);
  EXPECT_THROW(bs::d_plus_minus({0.0, 0.0, 1.0, 0.2, 0.0}), bs::DegenerateVolError);
  EXPECT_THROW(bs::g_function({1.0, 0.0, 1.0, 0.0, 0.0}), bs::DegenerateVolError);
}

TEST(BsGreeks, VegaClosedFormAndFiniteDifference) {
  EXPECT_NEAR(bs::vega({1.0, 0.0, 1.0, 0.2, 0.0}), bs::norm_pdf(0.1), 1e-15);
  const double h = 1e-5;
  for (double k : {0.8, 1.0, 1.3}) {
    const bs::BsInputs in(0.6, 0.0, k, 0.3, 0.01);
    const double fd = (bs::call(in.with_vol(0.3 + h)) - bs::call(in.with_vol(0.3 - h))) / (2 * h);
    EXPECT_LT(rel(bs::vega(in), fd), 1e-6);
  }
}

TEST(BsGreeks, GAndHAgainstFiniteDifferences) {
  for (double tau : {0.05, 0.5}) {
    for (double k : {0.9, 1.0, 1.15}) {
      const bs::BsInputs in(tau, 0.02, k, 0.35, 0.02);
      const double x = in.log_spot();
      const double h = 1e-4;
      auto c = [&](double xx) { return bs::call(in.with_log_spot(xx)); };
      const double dxx = (c(x + h) - 2 * c(x) + c(x - h)) / (h * h);
      const double dx = (c(x + h) - c(x - h)) / (2 * h);
      EXPECT_LT(rel(bs::g_function(in), dxx - dx), 1e-6) << tau << " " << k;
      EXPECT_GT(bs::g_function(in), 0.0);

      const double hx = 1e-5;
      const double dg = (bs::g_function(in.with_log_spot(x + hx)) - bs::g_function(in.with_log_spot(x - hx))) / (2 * hx);
      EXPECT_LT(std::abs(bs::h_function(in) - dg), 1e-6 * std::max(1.0, std::abs(dg)));
    }
  }
}

TEST(BsGreeks, LogStrikeDerivativesAgainstFiniteDifferences) {
  const double h = 1e-5;
  for (double tau : {0.05, 0.5}) {
    for (double k0 : {-0.1, 0.0, 0.12}) {
      const bs::BsInputs in(tau, 0.0, std::exp(k0), 0.3, 0.01);
      auto at = [&](double k) { return in.with_strike(std::exp(k)); };
      const double dk_c = (bs::call(at(k0 + h)) - bs::call(at(k0 - h))) / (2 * h);
      const double dkk_c = (bs::dk_call(at(k0 + h)) - bs::dk_call(at(k0 - h))) / (2 * h);
      const double dk_g = (bs::g_function(at(k0 + h)) - bs::g_function(at(k0 - h))) / (2 * h);
      const double dkk_g = (bs::dk_g(at(k0 + h)) - bs::dk_g(at(k0 - h))) / (2 * h);
      EXPECT_LT(std::abs(bs::dk_call(in) - dk_c), 1e-6 * std::max(1.0, std::abs(dk_c)));
      EXPECT_LT(std::abs(bs::dkk_call(in) - dkk_c), 1e-6 * std::max(1.0, std::abs(dkk_c)));
      EXPECT_LT(std::abs(bs::dk_g(in) - dk_g), 1e-6 * std::max(1.0, std::abs(dk_g)));
      EXPECT_LT(std::abs(bs::dkk_g(in) - dkk_g), 1e-6 * std::max(1.0, std::abs(dkk_g)));
    }
  }
}

TEST(BsGreeks, AtTheMoneyForwardIdentities) {
  for (double tau : {0.01, 0.2, 1.0}) {
    const double sigma = 0.22, r = 0.04;
    const double w = sigma * std::sqrt(tau);
    const bs::BsInputs in(tau, 0.0, std::exp(r * tau), sigma, r);
    const double c = bs::call(in);
    EXPECT_NEAR(c, bs::norm_cdf(w / 2) - bs::norm_cdf(-w / 2), 1e-12);
    EXPECT_NEAR(bs::dk_call(in), (c - 1.0) / 2.0, 1e-12);
    EXPECT_NEAR(bs::g_function(in), bs::norm_pdf(w / 2) / w, 1e-12);
  }
}

TEST(ForwardStart, ClosedFormProperties) {
  const double r = 0.03;
  EXPECT_EQ(bs::forward_start_price(0.0, 0.5, 0.8, r * 0.3, 0.0, r), 0.0);
  const double base = bs::forward_start_price(0.0, 0.5, 0.8, 0.02, 0.25, r);
  EXPECT_NEAR(bs::forward_start_price(0.7, 0.5, 0.8, 0.02, 0.25, r), std::exp(0.7) * base, 1e-14);
  EXPECT_EQ(bs::forward_start_price(0.0, 0.1, 0.4, 0.02, 0.25, r), base);
  EXPECT_THROW(bs::forward_start_price(0.0, 0.8, 0.8, 0.0, 0.2, r), std::invalid_argument);
}

TEST(ImpliedVol, RoundTrip) {
  const double target = bs::call({0.25, 0.0, 1.0, 0.2, 0.0});
  EXPECT_NEAR(bs::implied_vol(target, 0.25, 0.0, 1.0, 0.0).vol, 0.2, 1e-10);
  const double fs = bs::forward_start_price(0.0, 0.5, 0.6, 0.001, 0.3, 0.01);
  EXPECT_NEAR(bs::implied_vol(fs, 0.1, 0.0, std::exp(0.001), 0.01).vol, 0.3, 1e-10);
}

TEST(ImpliedVol, RandomSweep) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double sigma = 0.01 + 1.99 * u01(gen);
    const double tau = std::exp(std::log(1e-3) + (std::log(5.0) - std::log(1e-3)) * u01(gen));
    const double r = 0.05 * u01(gen);
    const double w = sigma * std::sqrt(tau);
    const double k = std::exp(r * tau + w * (-3.0 + 6.0 * u01(gen)));
    const double price = bs::call({tau, 0.0, k, sigma, r});
    const auto res = bs::implied_vol(price, tau, 0.0, k, r);
    ASSERT_FALSE(res.at_lower_bound);
    worst = std::max(worst, std::abs(res.vol - sigma));
    EXPECT_LE(std::abs(bs::call({tau, 0.0, k, res.vol, r}) - price), 1e-12);
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(ImpliedVol, BoundaryAndErrors) {
  const bs::BsInputs itm(0.5, 0.0, 0.8, 0.2, 0.01);
  const auto at_floor = bs::implied_vol(itm.intrinsic(), 0.5, 0.0, 0.8, 0.01);
  EXPECT_TRUE(at_floor.at_lower_bound);
  EXPECT_EQ(at_floor.vol, 0.0);
  try {
    bs::implied_vol(1.0, 0.5, 0.0, 0.8, 0.01);
    FAIL() << "expected NoSolution";
  } catch (const bs::ImpliedVolError& e) {
    EXPECT_EQ(e.kind(), bs::ImpliedVolError::Kind::NoSolution);
  }
  try {
    bs::implied_vol(NAN, 0.5, 0.0, 0.8, 0.01);
    FAIL() << "expected BadInput";
  } catch (const bs::ImpliedVolError& e) {
    EXPECT_EQ(e.kind(), bs::ImpliedVolError::Kind::BadInput);
  }
}
