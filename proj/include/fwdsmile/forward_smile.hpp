#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fwdsmile/grid.hpp"
#include "fwdsmile/mc_engine.hpp"
#include "fwdsmile/models.hpp"
#include "fwdsmile/stats.hpp"

namespace fwdsmile::smile {

struct SmilePoint {
  double alpha = 0.0;
  double vol = 0.0;
  double vol_se = 0.0;
  double vega = 0.0;  // normalized forward vega, d BS(s, 0, e^alpha, I) / dI
  McEstimate price;
  bool at_lower_bound = false;
  std::string error;  // non-empty when the inversion failed

  bool ok() const { return error.empty(); }
};

/// Forward implied vol I with V = e^{x_t} BS(s, 0, e^alpha, I); the price
/// error is carried to I through 1/vega. Failures are reported, not thrown.
SmilePoint implied_forward_vol(const McEstimate& price, double x_t, double s, double maturity,
                               double alpha, double rate);

/// alpha* = r (T - s).
double atm_alpha(double s, double maturity, double rate);

std::vector<SmilePoint> smile_slice(const mc::ForwardSample& sample, std::size_t maturity_index,
                                    std::span<const double> alphas);
std::vector<SmilePoint> smile_slice(const mc::PathBatch& batch, const ContractSpec& contract,
                                    std::span<const double> alphas);

/// Step rule for the ATM central differences:
/// h = max(factor * sqrt(gap) * I0, noise_multiple * 2 SE(normalized ATM price)),
/// where 2 SE is the log-moneyness shift moving the ATM price by one standard
/// error (|dV/dalpha| ~ 1/2 at the money). fixed_h > 0 overrides the rule.
struct FdRule {
  double factor = 0.05;
  double noise_multiple = 10.0;
  double fixed_h = 0.0;

  double step(double gap, double atm_vol, double atm_price_se) const;
};

struct SmileReport {
  double gap = 0.0;
  double h = 0.0;
  McEstimate level;
  McEstimate skew;
  McEstimate curvature;
  McEstimate scaled_curvature;
  bool underpowered = false;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
};

/// Report plus per-path influence values whose sample means linearise each
/// estimate; used to combine estimates from the same paths.
struct SmileReportDetail {
  SmileReport report;
  std::vector<double> level_influence;
  std::vector<double> skew_influence;
  std::vector<double> curvature_influence;
};

SmileReportDetail atm_derivatives_detail(const mc::ForwardSample& sample, std::size_t maturity_index,
                                         const FdRule& rule);
SmileReport atm_derivatives(const mc::ForwardSample& sample, std::size_t maturity_index,
                            const FdRule& rule);
SmileReport atm_derivatives(const mc::PathBatch& batch, const ContractSpec& contract, double h);

struct McConfig {
  std::size_t n_paths = 200000;
  double steps_per_year = 400.0;
  int min_forward_steps = 100;
  std::uint64_t seed = 20240601;
  mc::OuScheme scheme = mc::OuScheme::Euler;
  unsigned threads = 0;
};

/// First-order Richardson extrapolation to gap -> 0 from the two smallest
/// gaps g1 > g2: L = (g1 v(g2) - g2 v(g1)) / (g1 - g2).
struct Extrapolation {
  McEstimate level;
  McEstimate skew;
  McEstimate scaled_curvature;
  double gap_coarse = 0.0;
  double gap_fine = 0.0;
};

struct ConvergenceStudy {
  std::vector<SmileReport> reports;
  Extrapolation extrapolated;
  bool scaled_curvature_bounded = true;
  std::vector<std::string> warnings;
};

/// Successive |scaled curvature| ratios along decreasing gaps must stay below this.
inline constexpr double kBoundedRatio = 1.5;

/// One shared batch simulated to s + max(gap); every gap uses the same paths.
ConvergenceStudy convergence_study(const models::ModelSpec& model, double t, double s,
                                   std::span<const double> gaps, const McConfig& config,
                                   const FdRule& rule = {});

}  // namespace fwdsmile::smile
