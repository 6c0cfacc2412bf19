#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fwdsmile/grid.hpp"
#include "fwdsmile/models.hpp"
#include "fwdsmile/parallel.hpp"
#include "fwdsmile/rng.hpp"
#include "fwdsmile/stats.hpp"

namespace fwdsmile::mc {

enum class OuScheme { Euler, Exact };

/// One simulated joint path on the grid, plus the normals that drove it.
struct SimPath {
  std::vector<double> y;
  std::vector<double> sigma;
  std::vector<double> x;
  std::vector<double> dw;  // standard normal driving W* on step k
  std::vector<double> db;  // standard normal driving B* on step k
  std::size_t clamp_hits = 0;
};

class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, std::size_t path, std::size_t step)
      : std::runtime_error(what), path_(path), step_(step) {}
  std::size_t path() const { return path_; }
  std::size_t step() const { return step_; }

 private:
  std::size_t path_;
  std::size_t step_;
};

/// A reproducible set of paths.
///
/// Paths are not stored: path i is regenerated on demand from the Philox
/// stream keyed by (seed, i), so any path can be replayed in isolation and
/// every reduction is independent of the worker count.
class PathBatch {
 public:
  PathBatch(models::ModelSpec model, SimGrid grid, std::size_t n_paths, std::uint64_t seed,
            OuScheme scheme = OuScheme::Euler, unsigned threads = 0);

  const models::ModelSpec& model() const { return model_; }
  const SimGrid& grid() const { return grid_; }
  std::size_t n_paths() const { return n_paths_; }
  std::uint64_t seed() const { return seed_; }
  OuScheme scheme() const { return scheme_; }
  unsigned threads() const { return threads_; }

  void simulate_path(std::size_t index, SimPath& out) const;
  SimPath path(std::size_t index) const;

  /// Calls fn(i, path) for every path, in parallel; fn must only write slot i.
  template <class Fn>
  void for_each_path(Fn&& fn) const {
    parallel_chunks(n_paths_, threads_, [&](std::size_t begin, std::size_t end, unsigned) {
      SimPath buffer;
      for (std::size_t i = begin; i < end; ++i) {
        simulate_path(i, buffer);
        fn(i, static_cast<const SimPath&>(buffer));
      }
    });
  }

 private:
  models::ModelSpec model_;
  SimGrid grid_;
  std::size_t n_paths_;
  std::uint64_t seed_;
  OuScheme scheme_;
  unsigned threads_;
};

PathBatch simulate(const models::ModelSpec& model, const SimGrid& grid, std::size_t n_paths,
                   std::uint64_t seed, OuScheme scheme = OuScheme::Euler, unsigned threads = 0);

/// Per-path e^{X_s - x_t} and e^{X_T - x_t} for a set of maturities, the
/// common-random-number sample behind every smile computation.
struct ForwardSample {
  double t = 0.0;
  double x_t = 0.0;
  double rate = 0.0;
  double s = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> maturities;
  std::vector<double> growth_s;                 // [path]
  std::vector<std::vector<double>> growth_T;    // [maturity][path]

  std::size_t n_paths() const { return growth_s.size(); }
  std::size_t maturity_index(double maturity) const;
};

ForwardSample sample_forward(const PathBatch& batch, double s, std::span<const double> maturities);

/// Discounted payoffs e^{-r(T-t)} (e^{X_T} - e^{alpha + X_s})_+ / e^{x_t}, per path.
std::vector<double> normalized_payoffs(const ForwardSample& sample, std::size_t maturity_index,
                                       double alpha);

/// Direct Monte Carlo price V_t from a shared sample.
McEstimate price_forward_start(const ForwardSample& sample, std::size_t maturity_index, double alpha);

/// Direct Monte Carlo price V_t; contract.t must be the grid start.
McEstimate price_forward_start(const PathBatch& batch, const ContractSpec& contract);

/// Path functionals entering the decomposition formula, on grid nodes 0..index(T).
struct PathFunctionals {
  double realized_vol_s = 0.0;           // v_s
  std::vector<double> realized_vol;      // v_u
  std::vector<double> lambda;            // Lambda_u = int_{u v s}^T D_u sigma_theta^2 dtheta
  std::vector<double> strike_forward;    // M_u
};

PathFunctionals compute_path_functionals(const models::ModelSpec& model, const SimGrid& grid,
                                         const SimPath& path, const ContractSpec& contract);

/// Functionals for every path of a (small) batch.
std::vector<PathFunctionals> path_functionals(const PathBatch& batch, const ContractSpec& contract);

struct DecompositionTerms {
  double bs_term = 0.0;       // e^{X_t} BS(s, 0, e^alpha, v_s)
  double forward_term = 0.0;  // (rho/2) int_s^T e^{-r(u-t)} H sigma Lambda du
  double start_term = 0.0;    // (rho/2) G(s, 0, e^alpha, v_s) int_t^s e^{-r(u-t)} e^{X_u} sigma Lambda du
  double total() const { return bs_term + forward_term + start_term; }
};

DecompositionTerms decomposition_terms(const models::ModelSpec& model, const SimGrid& grid,
                                       const SimPath& path, const ContractSpec& contract);

struct DecompositionEstimate {
  McEstimate total;
  McEstimate bs_term;
  McEstimate forward_term;
  McEstimate start_term;
  std::size_t clamp_hits = 0;
};

/// Price from the decomposition formula: per-path BS term with the path's
/// realized vol plus the two correlation corrections.
DecompositionEstimate price_decomposition(const PathBatch& batch, const ContractSpec& contract);

/// Per-node summary of a batch, for debugging dumps.
struct BatchSummary {
  static constexpr std::uint32_t kVersion = 1;

  std::uint64_t seed = 0;
  std::uint64_t n_paths = 0;
  std::uint64_t model_hash = 0;
  std::uint32_t scheme = 0;
  double t0 = 0.0;
  double s = 0.0;
  double steps_per_year = 0.0;
  std::int32_t min_forward_steps = 0;
  std::vector<double> maturities;
  std::vector<double> times;
  std::vector<double> mean_x, var_x, mean_y, var_y;
};

BatchSummary summarize(const PathBatch& batch);
void write_batch_summary(const BatchSummary& summary, const std::string& filename);
BatchSummary read_batch_summary(const std::string& filename);

}  // namespace fwdsmile::mc
