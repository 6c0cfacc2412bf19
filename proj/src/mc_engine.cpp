#include "fwdsmile/mc_engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fwdsmile/blackscholes.hpp"

namespace fwdsmile::mc {

namespace {

void check_contract_on_grid(const SimGrid& grid, const ContractSpec& contract) {
  contract.validate();
  if (std::abs(contract.t - grid.t0()) > 1e-12) {
    throw std::invalid_argument("contract.t must equal the simulation start");
  }
  if (grid.index_of(contract.s) != grid.s_index()) {
    throw std::invalid_argument("contract.s must be the grid forward-start date");
  }
  (void)grid.index_of(contract.maturity);
}

// Suffix trapezoid integrals int_{t_j}^{t_last} v dtheta for j in [first, last].
void suffix_trapezoid(std::span<const double> nodes, std::size_t first, std::size_t last,
                      const std::vector<double>& values, std::vector<double>& out) {
  out.assign(nodes.size(), 0.0);
  for (std::size_t j = last; j-- > first;) {
    out[j] = out[j + 1] + 0.5 * (values[j] + values[j + 1]) * (nodes[j + 1] - nodes[j]);
  }
}

struct Workspace {
  std::vector<double> values;
  std::vector<double> var_suffix;     // int_{t_j}^T sigma^2
  std::vector<double> kernel_suffix;  // int_{t_j}^T D_s sigma_theta^2 dtheta
};

// Fills var_suffix and, for stochastic models, kernel_suffix on [iS, iT].
void fill_suffixes(const models::ModelSpec& model, std::span<const double> nodes, const SimPath& path,
                   std::size_t i_s, std::size_t i_t, double s, Workspace& ws) {
  ws.values.assign(nodes.size(), 0.0);
  for (std::size_t j = i_s; j <= i_t; ++j) ws.values[j] = path.sigma[j] * path.sigma[j];
  suffix_trapezoid(nodes, i_s, i_t, ws.values, ws.var_suffix);
  if (model.is_constant()) {
    ws.kernel_suffix.assign(nodes.size(), 0.0);
    return;
  }
  for (std::size_t j = i_s; j <= i_t; ++j) {
    ws.values[j] = models::malliavin_d_sigma_sq(model, path.y[j], s, nodes[j]);
  }
  suffix_trapezoid(nodes, i_s, i_t, ws.values, ws.kernel_suffix);
}

double lambda_at(const models::ModelSpec& model, std::span<const double> nodes, std::size_t i,
                 std::size_t i_s, double s, const Workspace& ws) {
  const auto* ss = model.stein_stein();
  if (ss == nullptr) return 0.0;
  return std::exp(ss->ou.kappa * (nodes[i] - s)) * ws.kernel_suffix[std::max(i, i_s)];
}

}  // namespace

PathBatch::PathBatch(models::ModelSpec model, SimGrid grid, std::size_t n_paths, std::uint64_t seed,
                     OuScheme scheme, unsigned threads)
    : model_(std::move(model)),
      grid_(std::move(grid)),
      n_paths_(n_paths),
      seed_(seed),
      scheme_(scheme),
      threads_(resolve_threads(threads)) {
  model_.validate();
  if (n_paths_ == 0) throw std::invalid_argument("PathBatch: n_paths must be >= 1");
}

void PathBatch::simulate_path(std::size_t index, SimPath& out) const {
  const auto nodes = grid_.nodes();
  const std::size_t n = nodes.size();
  out.y.resize(n);
  out.sigma.resize(n);
  out.x.resize(n);
  out.dw.resize(n - 1);
  out.db.resize(n - 1);
  out.clamp_hits = 0;

  const double r = model_.rate;
  const double rho = model_.rho;
  const double rho_bar = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  const auto* ss = model_.stein_stein();

  rng::NormalStream normals(seed_, index);
  out.y[0] = model_.initial_factor();
  out.x[0] = model_.x0;
  for (std::size_t k = 0;; ++k) {
    const double y = out.y[k];
    const double sig = model_.sigma_of(y);
    out.sigma[k] = sig;
    if (ss != nullptr && ss->f.is_clamped(y)) ++out.clamp_hits;
    if (k + 1 == n) break;

    const double dt = nodes[k + 1] - nodes[k];
    const double zw = normals.next();
    const double zb = normals.next();
    out.dw[k] = zw;
    out.db[k] = zb;
    const double sqdt = std::sqrt(dt);
    out.x[k + 1] = out.x[k] + (r - 0.5 * sig * sig) * dt + sig * sqdt * (rho * zw + rho_bar * zb);
    if (ss == nullptr) {
      out.y[k + 1] = y;
    } else if (scheme_ == OuScheme::Euler) {
      out.y[k + 1] = y + ss->ou.kappa * (ss->ou.m - y) * dt + ss->ou.lambda * sqdt * zw;
    } else {
      const double decay = std::exp(-ss->ou.kappa * dt);
      const double sd = std::sqrt(models::ou_variance(ss->ou, 0.0, dt));
      out.y[k + 1] = y * decay + ss->ou.m * (1.0 - decay) + sd * zw;
    }
    if (!std::isfinite(out.x[k + 1]) || !std::isfinite(out.y[k + 1])) {
      throw SimulationError("non-finite state in path " + std::to_string(index) + " at step " +
                                std::to_string(k),
                            index, k);
    }
  }
}

SimPath PathBatch::path(std::size_t index) const {
  SimPath p;
  simulate_path(index, p);
  return p;
}

PathBatch simulate(const models::ModelSpec& model, const SimGrid& grid, std::size_t n_paths,
                   std::uint64_t seed, OuScheme scheme, unsigned threads) {
  return PathBatch(model, grid, n_paths, seed, scheme, threads);
}

std::size_t ForwardSample::maturity_index(double maturity) const {
  for (std::size_t k = 0; k < maturities.size(); ++k) {
    if (std::abs(maturities[k] - maturity) <= 1e-12) return k;
  }
  throw std::invalid_argument("ForwardSample: maturity not sampled");
}

ForwardSample sample_forward(const PathBatch& batch, double s, std::span<const double> maturities) {
  const auto& grid = batch.grid();
  if (grid.index_of(s) != grid.s_index()) {
    throw std::invalid_argument("sample_forward: s must be the grid forward-start date");
  }
  std::vector<std::size_t> idx;
  for (double m : maturities) {
    if (!(m > s)) throw std::invalid_argument("sample_forward: maturities must exceed s");
    idx.push_back(grid.index_of(m));
  }
  ForwardSample out;
  out.t = grid.t0();
  out.x_t = batch.model().x0;
  out.rate = batch.model().rate;
  out.s = s;
  out.seed = batch.seed();
  out.maturities.assign(maturities.begin(), maturities.end());
  out.growth_s.resize(batch.n_paths());
  out.growth_T.assign(idx.size(), std::vector<double>(batch.n_paths()));
  const std::size_t i_s = grid.s_index();
  batch.for_each_path([&](std::size_t i, const SimPath& p) {
    out.growth_s[i] = std::exp(p.x[i_s] - p.x[0]);
    for (std::size_t k = 0; k < idx.size(); ++k) out.growth_T[k][i] = std::exp(p.x[idx[k]] - p.x[0]);
  });
  return out;
}

std::vector<double> normalized_payoffs(const ForwardSample& sample, std::size_t maturity_index,
                                       double alpha) {
  const double maturity = sample.maturities.at(maturity_index);
  const double disc = std::exp(-sample.rate * (maturity - sample.t));
  const double strike = std::exp(alpha);
  const auto& gT = sample.growth_T[maturity_index];
  std::vector<double> out(sample.n_paths());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = disc * std::max(gT[i] - strike * sample.growth_s[i], 0.0);
  }
  return out;
}

McEstimate price_forward_start(const ForwardSample& sample, std::size_t maturity_index, double alpha) {
  if (sample.n_paths() == 0) throw std::invalid_argument("price_forward_start: empty batch");
  const auto payoffs = normalized_payoffs(sample, maturity_index, alpha);
  McEstimate est = mean_estimate(payoffs, sample.seed);
  const double spot = std::exp(sample.x_t);
  est.value *= spot;
  est.std_error *= spot;
  return est;
}

McEstimate price_forward_start(const PathBatch& batch, const ContractSpec& contract) {
  check_contract_on_grid(batch.grid(), contract);
  const double m[] = {contract.maturity};
  const auto sample = sample_forward(batch, contract.s, m);
  return price_forward_start(sample, 0, contract.alpha);
}

PathFunctionals compute_path_functionals(const models::ModelSpec& model, const SimGrid& grid,
                                         const SimPath& path, const ContractSpec& contract) {
  check_contract_on_grid(grid, contract);
  const auto nodes = grid.nodes();
  const std::size_t i_s = grid.s_index();
  const std::size_t i_t = grid.index_of(contract.maturity);
  const double s = contract.s;
  const double T = contract.maturity;

  Workspace ws;
  fill_suffixes(model, nodes, path, i_s, i_t, s, ws);

  PathFunctionals out;
  out.realized_vol_s = std::sqrt(ws.var_suffix[i_s] / (T - s));
  out.realized_vol.resize(i_t + 1);
  out.lambda.resize(i_t + 1);
  out.strike_forward.resize(i_t + 1);
  for (std::size_t i = 0; i <= i_t; ++i) {
    if (i < i_s) {
      out.realized_vol[i] = std::sqrt(ws.var_suffix[i_s] / (T - nodes[i]));
    } else if (i < i_t) {
      out.realized_vol[i] = std::sqrt(ws.var_suffix[i] / (T - nodes[i]));
    } else {
      out.realized_vol[i] = std::abs(path.sigma[i]);
    }
    out.lambda[i] = lambda_at(model, nodes, i, i_s, s, ws);
    out.strike_forward[i] = i <= i_s
                                ? std::exp(contract.alpha + model.rate * (s - nodes[i]) + path.x[i])
                                : std::exp(contract.alpha + path.x[i_s]);
  }
  return out;
}

std::vector<PathFunctionals> path_functionals(const PathBatch& batch, const ContractSpec& contract) {
  std::vector<PathFunctionals> out(batch.n_paths());
  batch.for_each_path([&](std::size_t i, const SimPath& p) {
    out[i] = compute_path_functionals(batch.model(), batch.grid(), p, contract);
  });
  return out;
}

DecompositionTerms decomposition_terms(const models::ModelSpec& model, const SimGrid& grid,
                                       const SimPath& path, const ContractSpec& contract) {
  check_contract_on_grid(grid, contract);
  const auto nodes = grid.nodes();
  const std::size_t i_s = grid.s_index();
  const std::size_t i_t = grid.index_of(contract.maturity);
  const double s = contract.s;
  const double T = contract.maturity;
  const double r = model.rate;
  const double t = nodes[0];

  Workspace ws;
  fill_suffixes(model, nodes, path, i_s, i_t, s, ws);

  const double v_s = std::sqrt(ws.var_suffix[i_s] / (T - s));
  if (!(v_s > 0.0)) throw bs::DegenerateVolError("decomposition: zero realized volatility");

  DecompositionTerms out;
  const bs::BsInputs fwd(T - s, 0.0, std::exp(contract.alpha), v_s, r);
  out.bs_term = std::exp(path.x[0]) * bs::call(fwd);
  if (model.is_constant() || model.rho == 0.0) return out;

  // [t, s]: e^{-r(u-t)} e^{X_u} sigma_u Lambda_u
  double start_integral = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i <= i_s; ++i) {
    const double value = std::exp(-r * (nodes[i] - t) + path.x[i]) * path.sigma[i] *
                         lambda_at(model, nodes, i, i_s, s, ws);
    if (i > 0) start_integral += 0.5 * (prev + value) * (nodes[i] - nodes[i - 1]);
    prev = value;
  }
  out.start_term = 0.5 * model.rho * bs::g_function(fwd) * start_integral;

  // [s, T]: e^{-r(u-t)} H(u, X_u, M_u, v_u) sigma_u Lambda_u; the integrand vanishes at u = T.
  const double strike_after_s = std::exp(contract.alpha + path.x[i_s]);
  double forward_integral = 0.0;
  for (std::size_t i = i_s; i <= i_t; ++i) {
    double value = 0.0;
    if (i < i_t) {
      const double v_u = std::sqrt(ws.var_suffix[i] / (T - nodes[i]));
      if (v_u > 0.0) {
        const bs::BsInputs at_u(T - nodes[i], path.x[i], strike_after_s, v_u, r);
        value = std::exp(-r * (nodes[i] - t)) * bs::h_function(at_u) * path.sigma[i] *
                lambda_at(model, nodes, i, i_s, s, ws);
      }
    }
    if (i > i_s) forward_integral += 0.5 * (prev + value) * (nodes[i] - nodes[i - 1]);
    prev = value;
  }
  out.forward_term = 0.5 * model.rho * forward_integral;
  return out;
}

DecompositionEstimate price_decomposition(const PathBatch& batch, const ContractSpec& contract) {
  check_contract_on_grid(batch.grid(), contract);
  const std::size_t n = batch.n_paths();
  std::vector<double> bs_term(n), fwd_term(n), start_term(n), total(n);
  std::vector<std::size_t> clamp(n);
  batch.for_each_path([&](std::size_t i, const SimPath& p) {
    const auto terms = decomposition_terms(batch.model(), batch.grid(), p, contract);
    bs_term[i] = terms.bs_term;
    fwd_term[i] = terms.forward_term;
    start_term[i] = terms.start_term;
    total[i] = terms.total();
    clamp[i] = p.clamp_hits;
  });
  DecompositionEstimate out;
  out.total = mean_estimate(total, batch.seed());
  out.bs_term = mean_estimate(bs_term, batch.seed());
  out.forward_term = mean_estimate(fwd_term, batch.seed());
  out.start_term = mean_estimate(start_term, batch.seed());
  for (auto c : clamp) out.clamp_hits += c;
  return out;
}

}  // namespace fwdsmile::mc
