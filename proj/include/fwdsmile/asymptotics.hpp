#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fwdsmile/forward_smile.hpp"
#include "fwdsmile/models.hpp"
#include "fwdsmile/stats.hpp"

namespace fwdsmile::asym {

enum class Term1Method { Quadrature, NestedMc };

/// Budget for the first curvature term E_t[int E_u(D_u sigma_s^2 / sigma_s)^2 / E_u(sigma_s)^3 du] / 4.
///
/// Quadrature integrates the exact OU Gaussian transitions with adaptive
/// Gauss-Kronrod rules. NestedMc samples outer factor paths, and at each of
/// u_nodes graded dates estimates the inner conditional means from
/// inner_paths exact OU draws of Y_s given Y_u. The Identity vol map always
/// uses NestedMc, since the quadrature integrand is not integrable there.
struct InnerConfig {
  Term1Method method = Term1Method::Quadrature;
  int u_nodes = 20;
  std::size_t inner_paths = 20000;
  std::size_t outer_paths = 1000;
};

/// Samples with |sigma_s| below this are excluded under the Identity map.
inline constexpr double kIdentityCutoff = 1e-4;
/// Larger excluded fractions abort the computation.
inline constexpr double kMaxExcludedFraction = 1e-4;

/// E_{t,s} in two forms on independent paths: the vol-map form
/// lambda e^{-x_t} E[f'(Y_s) int e^{-r(u-t)} e^{X_u} f(Y_u) e^{-kappa(s-u)} du]
/// and the general form (e^{-x_t}/2) E[(1/sigma_s) int e^{-r(u-t)} e^{X_u} sigma_u D_u sigma_s^2 du].
struct CorrectionTerm {
  McEstimate value;         // vol-map form
  McEstimate general_form;  // general form, independent paths
  double dual_z = 0.0;
  std::size_t excluded = 0;
  std::vector<double> per_path;  // vol-map integrand per path
};

struct CurvatureLimit {
  McEstimate total;
  McEstimate term1;  // nested conditional-expectation term
  McEstimate term2;  // 1 / E(sigma_s)
  McEstimate term3;  // 1 / (E(sigma_s) + rho E_{t,s}), entering with a minus sign
  McEstimate term4;  // -(rho/2) e^{-x_t} E[(1/sigma_s^3) int ... D_u sigma_s^2 du]
  McEstimate rewritten_term4;  // -rho E_{t,s} E[1/f(Y_s)^2], diagnostic only
  double term1_abs_error = 0.0;  // quadrature error estimate, 0 for NestedMc
  Term1Method term1_method = Term1Method::Quadrature;
};

struct AsymptoticsReport {
  McEstimate mean_sigma_s;  // E_t(sigma_s)
  CorrectionTerm correction;
  McEstimate level;
  McEstimate skew;
  CurvatureLimit curvature;
  std::size_t excluded = 0;
  std::size_t clamp_hits = 0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

/// All three limits from one batch of (X, Y) paths on [t, s]; t is the simulation start.
AsymptoticsReport limits(const models::ModelSpec& model, double t, double s,
                         const smile::McConfig& config, const InnerConfig& inner = {});

CorrectionTerm correction_e(const models::ModelSpec& model, double t, double s,
                            const smile::McConfig& config);
McEstimate level_limit(const models::ModelSpec& model, double t, double s, const smile::McConfig& config);
McEstimate skew_limit(const models::ModelSpec& model, double t, double s, const smile::McConfig& config);
CurvatureLimit curvature_limit(const models::ModelSpec& model, double t, double s,
                               const smile::McConfig& config, const InnerConfig& inner = {});

struct Term1Result {
  double value = 0.0;
  double abs_error = 0.0;
};

/// Term 1 by nested quadrature. u_nodes > 0 replaces the adaptive u-rule by
/// the trapezoid rule on the graded nodes used by the nested Monte Carlo.
Term1Result term1_quadrature(const models::ModelSpec& model, double t, double s, int u_nodes = 0);

struct Term1Mc {
  McEstimate value;
  std::size_t excluded = 0;
};

Term1Mc term1_nested_mc(const models::ModelSpec& model, double t, double s, const InnerConfig& inner,
                        std::uint64_t seed, unsigned threads = 0);

/// Graded dates u_j = s - (s - t)(1 - j/(n-1))^2 and their trapezoid weights.
void graded_u_nodes(double t, double s, int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Inner conditional means given Y_u = y_u, by exact OU draws of Y_s.
struct InnerMoments {
  McEstimate f;        // E_u[f(Y_s)]
  McEstimate fprime;   // E_u[f'(Y_s)]
  McEstimate y;        // E_u[Y_s]
  McEstimate y_sq;     // E_u[Y_s^2]
};

InnerMoments inner_moments(const models::ModelSpec& model, double y_u, double u, double s,
                           std::size_t n_inner, std::uint64_t seed, std::uint64_t stream);

/// Seed of the limit-side batch in compare(), independent of the smile batch.
std::uint64_t limits_seed(std::uint64_t seed);

struct ComparisonRow {
  std::string quantity;
  McEstimate fd;
  McEstimate limit;
  double combined_se = 0.0;
  double z = 0.0;
  bool pass = false;
};

struct Comparison {
  std::vector<ComparisonRow> rows;
  smile::ConvergenceStudy study;
  AsymptoticsReport limits;

  bool all_pass() const;
};

/// Extrapolated FD level, skew and scaled curvature against the limits; a row
/// passes when |z| < 3 with the standard errors combined in quadrature.
Comparison compare(const models::ModelSpec& model, double t, double s, std::span<const double> gaps,
                   const smile::McConfig& config, const smile::FdRule& rule = {},
                   const InnerConfig& inner = {});

}  // namespace fwdsmile::asym
