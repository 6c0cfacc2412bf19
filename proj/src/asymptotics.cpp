#include "fwdsmile/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fwdsmile/grid.hpp"
#include "fwdsmile/mc_engine.hpp"
#include "fwdsmile/parallel.hpp"
#include "fwdsmile/rng.hpp"

namespace fwdsmile::asym {

namespace {

using Gk = boost::math::quadrature::gauss_kronrod<double, 31>;

constexpr std::uint64_t kGeneralDomain = 0x67656e6572616cULL;  // "general"
constexpr std::uint64_t kTerm1Domain = 0x7465726d31ULL;        // "term1"
constexpr std::uint64_t kLimitsDomain = 0x6c696d697473ULL;     // "limits"

// Relative tolerances of the nested term-1 quadrature.
constexpr double kInnerTol = 1e-8;
constexpr double kOuterTol = 1e-8;
constexpr double kUTol = 1e-7;
constexpr unsigned kMaxDepth = 8;

McEstimate exact(double value) { return {value, 0.0, 0, 0}; }

McEstimate from_influence(double value, std::span<const double> influence, std::uint64_t seed) {
  return {value, std_error_of(influence), influence.size(), seed};
}

double mean_of(std::span<const double> v) { return mean_estimate(v, 0).value; }

// E[fn(Y)] for Y ~ N(mean, sd^2), split at the kinks of fn.
template <class Fn>
double gauss_expect(Fn&& fn, double mean, double sd, const std::vector<double>& breaks, double tol,
                    double* error = nullptr) {
  if (!(sd > 0.0)) {
    if (error) *error = 0.0;
    return fn(mean);
  }
  const double lo = mean - 10.0 * sd;
  const double hi = mean + 10.0 * sd;
  std::vector<double> cuts{lo};
  for (double b : breaks) {
    if (b > lo && b < hi) cuts.push_back(b);
  }
  if (mean > lo && mean < hi) cuts.push_back(mean);
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  const double norm = 1.0 / (sd * std::sqrt(2.0 * std::numbers::pi));
  auto weighted = [&](double y) {
    const double z = (y - mean) / sd;
    return fn(y) * std::exp(-0.5 * z * z) * norm;
  };
  double total = 0.0;
  double err_total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    if (!(cuts[k + 1] > cuts[k])) continue;
    double err = 0.0;
    total += Gk::integrate(weighted, cuts[k], cuts[k + 1], kMaxDepth, tol, &err);
    err_total += err;
  }
  if (error) *error = err_total;
  return total;
}

// Conditional means E_u[f'(Y_s)] and E_u[f(Y_s)] given Y_u = y.
struct InnerMeans {
  double fprime;
  double f;
};

InnerMeans inner_means_quad(const models::ExtendedSteinStein& ss, double y, double u, double s) {
  const double mean = models::ou_mean(ss.ou, y, u, s);
  const double sd = std::sqrt(models::ou_variance(ss.ou, u, s));
  const auto breaks = ss.f.breakpoints();
  const double a = gauss_expect([&](double z) { return ss.f.derivative(z); }, mean, sd, breaks, kInnerTol);
  const double b = gauss_expect([&](double z) { return ss.f.value(z); }, mean, sd, breaks, kInnerTol);
  return {a, b};
}

// E_t[A^2 / B^3](u) over Y_u, without the lambda^2 e^{-2 kappa (s-u)} factor.
double term1_outer(const models::ModelSpec& model, double t, double u, double s) {
  const auto& ss = *model.stein_stein();
  const double mean = models::ou_mean(ss.ou, ss.ou.y0, t, u);
  const double sd = std::sqrt(models::ou_variance(ss.ou, t, u));
  return gauss_expect(
      [&](double y) {
        const auto m = inner_means_quad(ss, y, u, s);
        return m.fprime * m.fprime / (m.f * m.f * m.f);
      },
      mean, sd, ss.f.breakpoints(), kOuterTol);
}

// Running sums for inner estimates.
struct Accumulator {
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double v) {
    sum += v;
    sum_sq += v * v;
  }
  McEstimate estimate(std::size_t n, std::uint64_t seed) const {
    const double dn = static_cast<double>(n);
    const double mean = sum / dn;
    const double var = n > 1 ? std::max(0.0, (sum_sq - dn * mean * mean) / (dn - 1.0)) : 0.0;
    return {mean, std::sqrt(var / dn), n, seed};
  }
};

bool excluded_sample(const models::ModelSpec& model, double sigma) {
  const auto* ss = model.stein_stein();
  return ss != nullptr && !ss->f.bounded() && std::abs(sigma) < kIdentityCutoff;
}

void check_exclusions(std::size_t excluded, std::size_t total, const char* what) {
  if (total == 0) return;
  const double frac = static_cast<double>(excluded) / static_cast<double>(total);
  if (frac > kMaxExcludedFraction) {
    throw std::runtime_error(std::string(what) + ": " + std::to_string(excluded) + " of " +
                             std::to_string(total) +
                             " samples have |sigma_s| < 1e-4 under the identity vol map");
  }
}

// Per-path pieces on [t, s].
struct PathPieces {
  double y_s;
  double sigma_s;
  double growth_s;      // e^{X_s - x_t}
  double e_map;         // lambda f'(Y_s) int e^{-r(u-t)} e^{X_u - x_t} f(Y_u) e^{-kappa(s-u)} du
  double general_half;  // (1/2) int e^{-r(u-t)} e^{X_u - x_t} sigma_u D_u sigma_s^2 du
};

PathPieces path_pieces(const models::ModelSpec& model, std::span<const double> nodes,
                       const mc::SimPath& p) {
  const auto& ss = *model.stein_stein();
  const std::size_t last = nodes.size() - 1;
  const double t = nodes[0];
  const double s = nodes[last];
  const double r = model.rate;
  const double y_s = p.y[last];
  double map_int = 0.0;
  double gen_int = 0.0;
  double prev_map = 0.0;
  double prev_gen = 0.0;
  for (std::size_t j = 0; j <= last; ++j) {
    const double w = std::exp(-r * (nodes[j] - t) + p.x[j] - p.x[0]) * p.sigma[j];
    const double map_v = w * std::exp(-ss.ou.kappa * (s - nodes[j]));
    const double gen_v = w * models::malliavin_d_sigma_sq(model, y_s, nodes[j], s);
    if (j > 0) {
      const double dt = nodes[j] - nodes[j - 1];
      map_int += 0.5 * (prev_map + map_v) * dt;
      gen_int += 0.5 * (prev_gen + gen_v) * dt;
    }
    prev_map = map_v;
    prev_gen = gen_v;
  }
  PathPieces out;
  out.y_s = y_s;
  out.sigma_s = p.sigma[last];
  out.growth_s = std::exp(p.x[last] - p.x[0]);
  out.e_map = ss.ou.lambda * model.sigma_prime_of(y_s) * map_int;
  out.general_half = 0.5 * gen_int;
  return out;
}

mc::PathBatch start_batch(const models::ModelSpec& model, double t, double s,
                          const smile::McConfig& config, std::uint64_t seed) {
  const auto grid = SimGrid::build(t, s, {}, config.steps_per_year, 0);
  return mc::PathBatch(model, grid, config.n_paths, seed, config.scheme, config.threads);
}

AsymptoticsReport constant_report(const models::ModelSpec& model, const smile::McConfig& config) {
  const double sigma = std::get<models::ConstantVol>(model.vol).sigma;
  AsymptoticsReport rep;
  rep.n_paths = config.n_paths;
  rep.seed = config.seed;
  rep.mean_sigma_s = exact(sigma);
  rep.correction.value = exact(0.0);
  rep.correction.general_form = exact(0.0);
  rep.level = exact(sigma + model.rho * 0.0);
  rep.skew = exact(0.0);
  auto& c = rep.curvature;
  c.term1 = exact(0.0);
  c.term2 = exact(1.0 / sigma);
  c.term3 = exact(1.0 / (sigma + model.rho * 0.0));
  c.term4 = exact(0.0);
  c.rewritten_term4 = exact(0.0);
  c.total = exact(c.term1.value + c.term2.value - c.term3.value + c.term4.value);
  return rep;
}

}  // namespace

std::uint64_t limits_seed(std::uint64_t seed) { return rng::stream_id({seed, kLimitsDomain}); }

void graded_u_nodes(double t, double s, int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 2) throw std::invalid_argument("graded_u_nodes: need at least 2 nodes");
  nodes.assign(static_cast<std::size_t>(n), 0.0);
  weights.assign(static_cast<std::size_t>(n), 0.0);
  const double dw = 1.0 / (n - 1);
  for (int j = 0; j < n; ++j) {
    const double w = 1.0 - j * dw;
    nodes[j] = s - (s - t) * w * w;
    weights[j] = dw * 2.0 * (s - t) * w * ((j == 0 || j == n - 1) ? 0.5 : 1.0);
  }
  nodes.front() = t;
  nodes.back() = s;
}

Term1Result term1_quadrature(const models::ModelSpec& model, double t, double s, int u_nodes) {
  if (!(t <= s)) throw std::invalid_argument("term1_quadrature: requires t <= s");
  const auto* ss = model.stein_stein();
  if (ss == nullptr || t == s) return {0.0, 0.0};
  if (!ss->f.bounded()) {
    throw std::invalid_argument("term1_quadrature: not integrable for the identity vol map");
  }
  const double kappa = ss->ou.kappa;
  const double lam2 = ss->ou.lambda * ss->ou.lambda;
  auto integrand_u = [&](double u) { return std::exp(-2.0 * kappa * (s - u)) * term1_outer(model, t, u, s); };

  if (u_nodes > 0) {
    std::vector<double> nodes, weights;
    graded_u_nodes(t, s, u_nodes, nodes, weights);
    double sum = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      if (weights[j] != 0.0) sum += weights[j] * integrand_u(nodes[j]);
    }
    return {lam2 * sum, 0.0};
  }
  // u = s - (s - t) w^2 removes the square-root behaviour at u = s.
  auto in_w = [&](double w) { return integrand_u(s - (s - t) * w * w) * 2.0 * (s - t) * w; };
  double err = 0.0;
  const double v = Gk::integrate(in_w, 0.0, 1.0, kMaxDepth, kUTol, &err);
  return {lam2 * v, lam2 * err};
}

InnerMoments inner_moments(const models::ModelSpec& model, double y_u, double u, double s,
                           std::size_t n_inner, std::uint64_t seed, std::uint64_t stream) {
  const auto* ss = model.stein_stein();
  if (ss == nullptr) throw std::invalid_argument("inner_moments: requires a factor model");
  if (!(u <= s)) throw std::invalid_argument("inner_moments: requires u <= s");
  if (n_inner == 0) throw std::invalid_argument("inner_moments: n_inner must be >= 1");
  const double mean = models::ou_mean(ss->ou, y_u, u, s);
  const double sd = std::sqrt(models::ou_variance(ss->ou, u, s));
  rng::NormalStream normals(seed, stream);
  Accumulator f, fp, y, y2;
  for (std::size_t i = 0; i < n_inner; ++i) {
    const double ys = mean + sd * normals.next();
    f.add(ss->f.value(ys));
    fp.add(ss->f.derivative(ys));
    y.add(ys);
    y2.add(ys * ys);
  }
  return {f.estimate(n_inner, seed), fp.estimate(n_inner, seed), y.estimate(n_inner, seed),
          y2.estimate(n_inner, seed)};
}

Term1Mc term1_nested_mc(const models::ModelSpec& model, double t, double s, const InnerConfig& inner,
                        std::uint64_t seed, unsigned threads) {
  if (!(t <= s)) throw std::invalid_argument("term1_nested_mc: requires t <= s");
  const auto* ss = model.stein_stein();
  if (ss == nullptr || t == s) return {exact(0.0), 0};
  if (inner.outer_paths == 0 || inner.inner_paths == 0) {
    throw std::invalid_argument("term1_nested_mc: empty budget");
  }
  std::vector<double> nodes, weights;
  graded_u_nodes(t, s, inner.u_nodes, nodes, weights);
  const auto& ou = ss->ou;
  const double lam2 = ou.lambda * ou.lambda;
  const std::size_t n_outer = inner.outer_paths;
  std::vector<double> values(n_outer, 0.0);
  std::vector<char> dropped(n_outer, 0);

  parallel_chunks(n_outer, resolve_threads(threads), [&](std::size_t b, std::size_t e, unsigned) {
    for (std::size_t o = b; o < e; ++o) {
      rng::NormalStream outer(seed, rng::stream_id({o, 0}));
      double y = ou.y0;
      double prev = t;
      double acc = 0.0;
      for (std::size_t j = 0; j < nodes.size(); ++j) {
        const double u = nodes[j];
        if (u > prev) {
          y = models::ou_mean(ou, y, prev, u) + std::sqrt(models::ou_variance(ou, prev, u)) * outer.next();
          prev = u;
        }
        if (weights[j] == 0.0) continue;
        const auto m = inner_moments(model, y, u, s, inner.inner_paths, seed, rng::stream_id({o, j + 1}));
        if (excluded_sample(model, m.f.value)) {
          dropped[o] = 1;
          break;
        }
        const double a = m.fprime.value;
        const double bm = m.f.value;
        acc += weights[j] * std::exp(-2.0 * ou.kappa * (s - u)) * a * a / (bm * bm * bm);
      }
      values[o] = lam2 * acc;
    }
  });

  std::vector<double> kept;
  kept.reserve(n_outer);
  for (std::size_t o = 0; o < n_outer; ++o) {
    if (!dropped[o]) kept.push_back(values[o]);
  }
  const std::size_t excluded = n_outer - kept.size();
  check_exclusions(excluded, n_outer, "term1_nested_mc");
  return {mean_estimate(kept, seed), excluded};
}

namespace {

AsymptoticsReport limits_impl(const models::ModelSpec& model, double t, double s,
                              const smile::McConfig& config, const InnerConfig& inner, bool with_term1) {
  model.validate();
  if (!(t <= s)) throw std::invalid_argument("limits: requires t <= s");
  if (model.is_constant()) return constant_report(model, config);

  const auto& ss = *model.stein_stein();
  const bool identity = !ss.f.bounded();
  const double rho = model.rho;
  const double r = model.rate;

  AsymptoticsReport rep;
  rep.n_paths = config.n_paths;
  rep.seed = config.seed;
  if (identity) rep.warnings.push_back("identity vol map: the limit formulas hold only formally");

  // Main batch.
  const auto batch = start_batch(model, t, s, config, config.seed);
  const auto nodes = batch.grid().nodes();
  const std::size_t n = batch.n_paths();
  std::vector<PathPieces> pieces(n);
  std::vector<std::size_t> clamp(n);
  batch.for_each_path([&](std::size_t i, const mc::SimPath& p) {
    pieces[i] = path_pieces(model, nodes, p);
    clamp[i] = p.clamp_hits;
  });
  for (auto c : clamp) rep.clamp_hits += c;
  if (rep.clamp_hits > 0) {
    rep.warnings.push_back("vol clamp active at " + std::to_string(rep.clamp_hits) +
                           " path nodes; one-sided derivatives used there");
  }

  std::vector<PathPieces> kept;
  kept.reserve(n);
  for (const auto& pc : pieces) {
    if (!excluded_sample(model, pc.sigma_s)) kept.push_back(pc);
  }
  rep.excluded = n - kept.size();
  check_exclusions(rep.excluded, n, "limits");
  const std::size_t m = kept.size();
  const std::uint64_t seed = config.seed;

  std::vector<double> sig(m), e(m), skew(m), t4(m), inv_f2(m);
  const double skew_scale = rho * std::exp(-r * (s - t)) / 4.0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& pc = kept[i];
    sig[i] = pc.sigma_s;
    e[i] = pc.e_map;
    skew[i] = skew_scale * pc.growth_s * models::skew_quotient(model, pc.y_s);
    t4[i] = -rho * pc.general_half / (pc.sigma_s * pc.sigma_s * pc.sigma_s);
    inv_f2[i] = 1.0 / (pc.sigma_s * pc.sigma_s);
  }

  // E_t(sigma_s): exact for the identity map.
  const double mean_sig = identity ? models::ou_mean(ss.ou, ss.ou.y0, t, s) : mean_of(sig);
  rep.mean_sigma_s = identity ? McEstimate{mean_sig, 0.0, m, seed} : from_influence(mean_sig, sig, seed);

  auto& corr = rep.correction;
  corr.value = mean_estimate(e, seed);
  corr.per_path = e;
  corr.excluded = rep.excluded;

  // General form on independent paths.
  {
    const auto gbatch = start_batch(model, t, s, config, rng::stream_id({seed, kGeneralDomain}));
    std::vector<double> gen(n);
    std::vector<char> drop(n, 0);
    gbatch.for_each_path([&](std::size_t i, const mc::SimPath& p) {
      const auto pc = path_pieces(model, nodes, p);
      if (excluded_sample(model, pc.sigma_s)) {
        drop[i] = 1;
        return;
      }
      gen[i] = pc.general_half / pc.sigma_s;
    });
    std::vector<double> gk;
    gk.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!drop[i]) gk.push_back(gen[i]);
    }
    check_exclusions(n - gk.size(), n, "correction_e general form");
    corr.general_form = mean_estimate(gk, gbatch.seed());
    corr.dual_z = z_score(corr.value.value, corr.value.std_error, corr.general_form.value,
                          corr.general_form.std_error);
  }

  // Level E(sigma_s) + rho E_{t,s}.
  const double level = mean_sig + rho * corr.value.value;
  std::vector<double> level_infl(m);
  for (std::size_t i = 0; i < m; ++i) level_infl[i] = (identity ? 0.0 : sig[i]) + rho * e[i];
  rep.level = from_influence(level, level_infl, seed);
  rep.skew = mean_estimate(skew, seed);

  // Curvature.
  auto& c = rep.curvature;
  c.term1_method = identity ? Term1Method::NestedMc : inner.method;
  if (!with_term1) {
    c.term1 = exact(NAN);
  } else if (c.term1_method == Term1Method::Quadrature) {
    const auto q = term1_quadrature(model, t, s);
    c.term1 = {q.value, 0.0, 0, seed};
    c.term1_abs_error = q.abs_error;
  } else {
    const auto q = term1_nested_mc(model, t, s, inner, rng::stream_id({seed, kTerm1Domain}), config.threads);
    c.term1 = q.value;
    rep.excluded += q.excluded;
  }
  std::vector<double> infl2(m), infl3(m), total_infl(m);
  for (std::size_t i = 0; i < m; ++i) {
    infl2[i] = identity ? 0.0 : -sig[i] / (mean_sig * mean_sig);
    infl3[i] = -level_infl[i] / (level * level);
    total_infl[i] = infl2[i] - infl3[i] + t4[i];
  }
  c.term2 = from_influence(1.0 / mean_sig, infl2, seed);
  c.term3 = from_influence(1.0 / level, infl3, seed);
  c.term4 = mean_estimate(t4, seed);
  const double inv_f2_mean = mean_of(inv_f2);
  std::vector<double> rw(m);
  for (std::size_t i = 0; i < m; ++i) rw[i] = -rho * (e[i] * inv_f2_mean + corr.value.value * inv_f2[i]);
  c.rewritten_term4 = from_influence(-rho * corr.value.value * inv_f2_mean, rw, seed);
  const double total = c.term1.value + c.term2.value - c.term3.value + c.term4.value;
  const double se_rest = std_error_of(total_infl);
  c.total = {total, std::hypot(se_rest, c.term1.std_error), m, seed};
  return rep;
}

}  // namespace

AsymptoticsReport limits(const models::ModelSpec& model, double t, double s,
                         const smile::McConfig& config, const InnerConfig& inner) {
  return limits_impl(model, t, s, config, inner, true);
}

CorrectionTerm correction_e(const models::ModelSpec& model, double t, double s,
                            const smile::McConfig& config) {
  return limits_impl(model, t, s, config, {}, false).correction;
}

McEstimate level_limit(const models::ModelSpec& model, double t, double s, const smile::McConfig& config) {
  return limits_impl(model, t, s, config, {}, false).level;
}

McEstimate skew_limit(const models::ModelSpec& model, double t, double s, const smile::McConfig& config) {
  return limits_impl(model, t, s, config, {}, false).skew;
}

CurvatureLimit curvature_limit(const models::ModelSpec& model, double t, double s,
                               const smile::McConfig& config, const InnerConfig& inner) {
  return limits(model, t, s, config, inner).curvature;
}

bool Comparison::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const ComparisonRow& r) { return r.pass; });
}

Comparison compare(const models::ModelSpec& model, double t, double s, std::span<const double> gaps,
                   const smile::McConfig& config, const smile::FdRule& rule, const InnerConfig& inner) {
  Comparison out;
  out.study = smile::convergence_study(model, t, s, gaps, config, rule);
  auto lim_cfg = config;
  lim_cfg.seed = limits_seed(config.seed);
  out.limits = limits(model, t, s, lim_cfg, inner);
  auto row = [](std::string name, const McEstimate& fd, const McEstimate& lim) {
    ComparisonRow r;
    r.quantity = std::move(name);
    r.fd = fd;
    r.limit = lim;
    r.combined_se = std::hypot(fd.std_error, lim.std_error);
    r.z = z_score(fd.value, fd.std_error, lim.value, lim.std_error);
    r.pass = std::abs(r.z) < 3.0;
    return r;
  };
  const auto& ex = out.study.extrapolated;
  out.rows.push_back(row("level", ex.level, out.limits.level));
  out.rows.push_back(row("skew", ex.skew, out.limits.skew));
  out.rows.push_back(row("scaled_curvature", ex.scaled_curvature, out.limits.curvature.total));
  return out;
}

}  // namespace fwdsmile::asym
