#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace fwdsmile {

/// A Monte Carlo output with its uncertainty.
struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;

  double ci_half_width(double z = 3.0) const { return z * std_error; }
};

/// Sample mean and standard error of per-path contributions, summed in index order.
inline McEstimate mean_estimate(std::span<const double> per_path, std::uint64_t seed) {
  if (per_path.empty()) throw std::invalid_argument("mean_estimate: empty sample");
  const auto n = per_path.size();
  double sum = 0.0;
  for (double v : per_path) sum += v;
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : per_path) ss += (v - mean) * (v - mean);
  const double var = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
  return {mean, std::sqrt(var / static_cast<double>(n)), n, seed};
}

/// Standard error of the mean of per-path values (used for linearised estimators).
inline double std_error_of(std::span<const double> per_path) {
  return mean_estimate(per_path, 0).std_error;
}

/// z-score of a - b for independent-or-conservatively-combined errors.
inline double z_score(double a, double se_a, double b, double se_b) {
  const double se = std::sqrt(se_a * se_a + se_b * se_b);
  if (se == 0.0) return a == b ? 0.0 : (a > b ? INFINITY : -INFINITY);
  return (a - b) / se;
}

}  // namespace fwdsmile
