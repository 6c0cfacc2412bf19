#pragma once

#include <string>
#include <variant>
#include <vector>

namespace fwdsmile::models {

/// Ornstein-Uhlenbeck factor dY = kappa (m - Y) dt + lambda dW*.
struct OuParams {
  double kappa = 1.0;
  double m = 0.2;
  double lambda = 0.25;
  double y0 = 0.25;

  void validate() const;
};

/// Volatility map sigma = f(Y).
///
/// Identity reproduces the classical Stein-Stein model but is neither bounded
/// away from zero nor above, so the limit formulas only hold formally for it.
/// AbsClamped and SmoothedAbs are bounded in [sigma_min, sigma_max]. At the
/// clamp corners f is not differentiable; derivative() returns the one-sided
/// value from inside the clamped region (zero) and is_clamped() reports it.
class VolFunction {
 public:
  enum class Kind { Identity, AbsClamped, SmoothedAbs };

  static VolFunction identity();
  static VolFunction abs_clamped(double sigma_min, double sigma_max);
  static VolFunction smoothed_abs(double eps, double sigma_min, double sigma_max);
  /// SmoothedAbs(1e-3, 0.01, 2.0).
  static VolFunction make_default();

  Kind kind() const { return kind_; }
  double eps() const { return eps_; }
  double sigma_min() const { return sigma_min_; }
  double sigma_max() const { return sigma_max_; }
  bool bounded() const { return kind_ != Kind::Identity; }

  double value(double y) const;
  double derivative(double y) const;
  /// True when the clamp is active at y (including the corners themselves).
  bool is_clamped(double y) const;
  /// Points where f or f' is not smooth, sorted ascending.
  std::vector<double> breakpoints() const;

  std::string describe() const;

 private:
  VolFunction(Kind kind, double eps, double lo, double hi)
      : kind_(kind), eps_(eps), sigma_min_(lo), sigma_max_(hi) {}

  double raw(double y) const;

  Kind kind_;
  double eps_;
  double sigma_min_;
  double sigma_max_;
};

struct ConstantVol {
  double sigma = 0.2;
};

/// sigma_t = f(Y_t) with Y an OU process driven by W*.
struct ExtendedSteinStein {
  OuParams ou;
  VolFunction f = VolFunction::make_default();
};

/// dX = (r - sigma^2/2) dt + sigma (rho dW* + sqrt(1 - rho^2) dB*).
struct ModelSpec {
  double rate = 0.0;
  double rho = 0.0;
  double x0 = 0.0;
  std::variant<ConstantVol, ExtendedSteinStein> vol = ConstantVol{};

  void validate() const;

  bool is_constant() const { return std::holds_alternative<ConstantVol>(vol); }
  const ExtendedSteinStein* stein_stein() const { return std::get_if<ExtendedSteinStein>(&vol); }

  /// Initial factor value; the constant vol for ConstantVol models.
  double initial_factor() const;
  /// Volatility as a function of the factor state.
  double sigma_of(double y) const;
  double sigma_prime_of(double y) const;

  /// Canonical text form; hashing it identifies a model in dumps and CSV headers.
  std::string canonical() const;
};

/// g(t, s) = y e^{-kappa (s - t)} + m (1 - e^{-kappa (s - t)}).
double ou_mean(const OuParams& p, double y, double t, double s);

/// lambda^2 (1 - e^{-2 kappa (s - t)}) / (2 kappa).
double ou_variance(const OuParams& p, double t, double s);

/// D_u Y_s = lambda e^{-kappa (s - u)}, u <= s.
double malliavin_d_y(const OuParams& p, double u, double s);

/// D_u sigma_s^2 = 2 f(y_s) f'(y_s) lambda e^{-kappa (s - u)}; zero for constant vol.
double malliavin_d_sigma_sq(const ModelSpec& model, double y_s, double u, double s);

/// Limit of D_u sigma_theta^2 as u, theta -> s: 2 lambda f(y_s) f'(y_s).
double sigma_bar_sq(const ModelSpec& model, double y_s);

/// sigma_bar^2 / sigma^2 = 2 lambda f'(y_s) / f(y_s).
double skew_quotient(const ModelSpec& model, double y_s);

/// 64-bit FNV-1a.
unsigned long long fnv1a(const std::string& text);

}  // namespace fwdsmile::models
