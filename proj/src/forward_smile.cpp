#include "fwdsmile/forward_smile.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fwdsmile/blackscholes.hpp"

namespace fwdsmile::smile {

namespace {

struct Inverted {
  double vol;
  double vega;
};

// Inversion at one log-moneyness from normalized per-path payoffs.
Inverted invert_normalized(double mean_price, double gap, double alpha, double rate) {
  const auto res = bs::implied_vol(mean_price, gap, 0.0, std::exp(alpha), rate);
  if (res.at_lower_bound) {
    throw bs::ImpliedVolError(bs::ImpliedVolError::Kind::NoSolution,
                              "forward price at intrinsic value; smile derivative undefined");
  }
  const double v = bs::vega(bs::BsInputs(gap, 0.0, std::exp(alpha), res.vol, rate));
  return {res.vol, v};
}

McEstimate from_influence(double value, std::span<const double> influence, std::uint64_t seed) {
  return {value, std_error_of(influence), influence.size(), seed};
}

}  // namespace

SmilePoint implied_forward_vol(const McEstimate& price, double x_t, double s, double maturity,
                               double alpha, double rate) {
  if (!(s < maturity)) throw std::invalid_argument("implied_forward_vol: requires s < T");
  SmilePoint pt;
  pt.alpha = alpha;
  pt.price = price;
  const double tau = maturity - s;
  const double scale = std::exp(-x_t);
  try {
    const auto res = bs::implied_vol(price.value * scale, tau, 0.0, std::exp(alpha), rate);
    pt.vol = res.vol;
    pt.at_lower_bound = res.at_lower_bound;
    if (res.vol > 0.0) {
      pt.vega = bs::vega(bs::BsInputs(tau, 0.0, std::exp(alpha), res.vol, rate));
      pt.vol_se = pt.vega > 0.0 ? price.std_error * scale / pt.vega : INFINITY;
    } else {
      pt.vol_se = INFINITY;
    }
  } catch (const bs::ImpliedVolError& e) {
    pt.error = e.what();
    pt.vol = NAN;
    pt.vol_se = NAN;
  }
  return pt;
}

double atm_alpha(double s, double maturity, double rate) { return rate * (maturity - s); }

std::vector<SmilePoint> smile_slice(const mc::ForwardSample& sample, std::size_t maturity_index,
                                    std::span<const double> alphas) {
  const double maturity = sample.maturities.at(maturity_index);
  std::vector<SmilePoint> out;
  out.reserve(alphas.size());
  for (double a : alphas) {
    const auto price = mc::price_forward_start(sample, maturity_index, a);
    out.push_back(implied_forward_vol(price, sample.x_t, sample.s, maturity, a, sample.rate));
  }
  return out;
}

std::vector<SmilePoint> smile_slice(const mc::PathBatch& batch, const ContractSpec& contract,
                                    std::span<const double> alphas) {
  contract.validate();
  const double m[] = {contract.maturity};
  const auto sample = mc::sample_forward(batch, contract.s, m);
  return smile_slice(sample, 0, alphas);
}

double FdRule::step(double gap, double atm_vol, double atm_price_se) const {
  if (fixed_h > 0.0) return fixed_h;
  return std::max(factor * std::sqrt(gap) * atm_vol, noise_multiple * 2.0 * atm_price_se);
}

SmileReportDetail atm_derivatives_detail(const mc::ForwardSample& sample, std::size_t maturity_index,
                                         const FdRule& rule) {
  const double maturity = sample.maturities.at(maturity_index);
  const double gap = maturity - sample.s;
  const double r = sample.rate;
  const double a0 = atm_alpha(sample.s, maturity, r);

  const auto p0 = mc::normalized_payoffs(sample, maturity_index, a0);
  const auto est0 = mean_estimate(p0, sample.seed);
  const auto inv0 = invert_normalized(est0.value, gap, a0, r);
  const double h = rule.step(gap, inv0.vol, est0.std_error);
  if (!(h > 0.0)) throw std::invalid_argument("atm_derivatives: finite-difference step must be > 0");

  const auto pm = mc::normalized_payoffs(sample, maturity_index, a0 - h);
  const auto pp = mc::normalized_payoffs(sample, maturity_index, a0 + h);
  const auto estm = mean_estimate(pm, sample.seed);
  const auto estp = mean_estimate(pp, sample.seed);
  const auto invm = invert_normalized(estm.value, gap, a0 - h, r);
  const auto invp = invert_normalized(estp.value, gap, a0 + h, r);

  const std::size_t n = p0.size();
  SmileReportDetail d;
  d.level_influence.resize(n);
  d.skew_influence.resize(n);
  d.curvature_influence.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double q0 = p0[i] / inv0.vega;
    const double qm = pm[i] / invm.vega;
    const double qp = pp[i] / invp.vega;
    d.level_influence[i] = q0;
    d.skew_influence[i] = (qp - qm) / (2.0 * h);
    d.curvature_influence[i] = (qp - 2.0 * q0 + qm) / (h * h);
  }

  auto& rep = d.report;
  rep.gap = gap;
  rep.h = h;
  rep.n_paths = n;
  rep.seed = sample.seed;
  rep.level = from_influence(inv0.vol, d.level_influence, sample.seed);
  rep.skew = from_influence((invp.vol - invm.vol) / (2.0 * h), d.skew_influence, sample.seed);
  rep.curvature =
      from_influence((invp.vol - 2.0 * inv0.vol + invm.vol) / (h * h), d.curvature_influence, sample.seed);
  rep.scaled_curvature = {gap * rep.curvature.value, gap * rep.curvature.std_error, n, sample.seed};
  rep.underpowered = rep.curvature.std_error > std::abs(rep.curvature.value);
  return d;
}

SmileReport atm_derivatives(const mc::ForwardSample& sample, std::size_t maturity_index,
                            const FdRule& rule) {
  return atm_derivatives_detail(sample, maturity_index, rule).report;
}

SmileReport atm_derivatives(const mc::PathBatch& batch, const ContractSpec& contract, double h) {
  contract.validate();
  if (!(h > 0.0)) throw std::invalid_argument("atm_derivatives: h must be > 0");
  const double m[] = {contract.maturity};
  const auto sample = mc::sample_forward(batch, contract.s, m);
  FdRule rule;
  rule.fixed_h = h;
  return atm_derivatives(sample, 0, rule);
}

ConvergenceStudy convergence_study(const models::ModelSpec& model, double t, double s,
                                   std::span<const double> gaps, const McConfig& config,
                                   const FdRule& rule) {
  if (gaps.empty()) throw std::invalid_argument("convergence_study: empty gap list");
  for (std::size_t k = 0; k < gaps.size(); ++k) {
    if (!(gaps[k] > 0.0)) throw std::invalid_argument("convergence_study: gaps must be > 0");
    if (k > 0 && !(gaps[k] < gaps[k - 1])) {
      throw std::invalid_argument("convergence_study: gaps must be strictly decreasing");
    }
    if (gaps[k] * config.steps_per_year < 1.0 - 1e-9) {
      throw std::invalid_argument("convergence_study: gap below the grid resolution");
    }
  }
  std::vector<double> maturities;
  for (double g : gaps) maturities.push_back(s + g);
  const auto grid = SimGrid::build(t, s, maturities, config.steps_per_year, config.min_forward_steps);
  const mc::PathBatch batch(model, grid, config.n_paths, config.seed, config.scheme, config.threads);
  const auto sample = mc::sample_forward(batch, s, maturities);

  ConvergenceStudy out;
  std::vector<SmileReportDetail> details;
  for (std::size_t k = 0; k < gaps.size(); ++k) {
    details.push_back(atm_derivatives_detail(sample, k, rule));
    details.back().report.gap = gaps[k];
    details.back().report.scaled_curvature.value = gaps[k] * details.back().report.curvature.value;
    details.back().report.scaled_curvature.std_error = gaps[k] * details.back().report.curvature.std_error;
    out.reports.push_back(details.back().report);
  }

  const std::size_t fine = gaps.size() - 1;
  if (gaps.size() == 1) {
    out.warnings.push_back("single gap: no extrapolation, smallest-gap values reported");
    const auto& r = out.reports[0];
    out.extrapolated = {r.level, r.skew, r.scaled_curvature, r.gap, r.gap};
  } else {
    const std::size_t coarse = fine - 1;
    const double g1 = gaps[coarse];
    const double g2 = gaps[fine];
    const double w_fine = g1 / (g1 - g2);
    const double w_coarse = -g2 / (g1 - g2);
    auto combine = [&](double v_coarse, double v_fine, const std::vector<double>& i_coarse,
                       const std::vector<double>& i_fine, double scale_coarse, double scale_fine) {
      std::vector<double> infl(i_fine.size());
      for (std::size_t i = 0; i < infl.size(); ++i) {
        infl[i] = w_coarse * scale_coarse * i_coarse[i] + w_fine * scale_fine * i_fine[i];
      }
      return from_influence(w_coarse * v_coarse + w_fine * v_fine, infl, config.seed);
    };
    const auto& dc = details[coarse];
    const auto& df = details[fine];
    out.extrapolated.level = combine(dc.report.level.value, df.report.level.value, dc.level_influence,
                                     df.level_influence, 1.0, 1.0);
    out.extrapolated.skew = combine(dc.report.skew.value, df.report.skew.value, dc.skew_influence,
                                    df.skew_influence, 1.0, 1.0);
    out.extrapolated.scaled_curvature =
        combine(dc.report.scaled_curvature.value, df.report.scaled_curvature.value,
                dc.curvature_influence, df.curvature_influence, g1, g2);
    out.extrapolated.gap_coarse = g1;
    out.extrapolated.gap_fine = g2;

    for (std::size_t k = 1; k < gaps.size(); ++k) {
      const double prev = std::abs(out.reports[k - 1].level.value - out.extrapolated.level.value);
      const double cur = std::abs(out.reports[k].level.value - out.extrapolated.level.value);
      if (cur > prev) {
        out.warnings.push_back("level distance to extrapolation not decreasing at gap " +
                               std::to_string(gaps[k]));
      }
    }
  }

  for (std::size_t k = 0; k < out.reports.size(); ++k) {
    const double c = out.reports[k].scaled_curvature.value;
    if (!std::isfinite(c)) out.scaled_curvature_bounded = false;
    if (k > 0) {
      const double prev = std::abs(out.reports[k - 1].scaled_curvature.value);
      if (std::abs(c) > kBoundedRatio * prev) out.scaled_curvature_bounded = false;
    }
    if (out.reports[k].underpowered) {
      out.warnings.push_back("curvature underpowered at gap " + std::to_string(gaps[k]));
    }
  }
  return out;
}

}  // namespace fwdsmile::smile
