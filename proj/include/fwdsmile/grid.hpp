#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fwdsmile {

/// Forward-start contract: payoff (e^{X_T} - e^alpha e^{X_s})_+ seen from t.
struct ContractSpec {
  double t = 0.0;
  double s = 0.5;
  double maturity = 0.6;
  double alpha = 0.0;

  void validate() const;
  double gap() const { return maturity - s; }
};

/// Simulation time grid with the start, the forward-start date and every
/// maturity placed exactly on nodes.
///
/// [t0, s] is split uniformly at roughly steps_per_year. Each segment of
/// (s, T_max] between consecutive maturities is split uniformly with a step no
/// larger than 1/steps_per_year nor (T_k - s) / min_forward_steps, so every
/// forward window [s, T_k] carries at least min_forward_steps steps.
class SimGrid {
 public:
  static SimGrid build(double t0, double s, std::vector<double> maturities,
                       double steps_per_year = 400.0, int min_forward_steps = 100);

  double t0() const { return t0_; }
  double s() const { return s_; }
  double steps_per_year() const { return steps_per_year_; }
  int min_forward_steps() const { return min_forward_steps_; }
  std::span<const double> maturities() const { return maturities_; }
  std::span<const double> nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t steps() const { return nodes_.size() - 1; }
  std::size_t s_index() const { return s_index_; }

  /// Index of the node at `time`; throws if `time` is not a node.
  std::size_t index_of(double time) const;
  bool has_node(double time) const;

  std::string canonical() const;

 private:
  double t0_ = 0.0;
  double s_ = 0.0;
  double steps_per_year_ = 0.0;
  int min_forward_steps_ = 0;
  std::vector<double> maturities_;
  std::vector<double> nodes_;
  std::size_t s_index_ = 0;
};

}  // namespace fwdsmile
