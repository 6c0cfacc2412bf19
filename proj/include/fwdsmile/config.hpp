#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fwdsmile/asymptotics.hpp"
#include "fwdsmile/forward_smile.hpp"
#include "fwdsmile/models.hpp"

namespace fwdsmile::config {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ContractBlock {
  double t = 0.0;
  double s = 0.5;
  std::vector<double> maturities;  // explicit T values
  std::vector<double> gaps = {0.2, 0.1, 0.05, 0.025};
  std::vector<double> alphas;  // empty: the ATM-forward point of each maturity

  /// Explicit maturities if given, else s + gap for every gap.
  std::vector<double> resolved_maturities() const;
};

struct OutputBlock {
  std::string directory = ".";
  std::string prefix = "fwdsmile_";
};

struct RunConfig {
  models::ModelSpec model;
  ContractBlock contract;
  smile::McConfig mc;
  asym::InnerConfig inner;
  smile::FdRule fd;
  OutputBlock output;

  void validate() const;
  /// Every resolved field as YAML. The worker count is left out because it
  /// never changes results.
  std::string resolved_yaml() const;
  /// The model, contract, mc and fd blocks of resolved_yaml(): every field
  /// that can change a result.
  std::string result_yaml() const;
  /// FNV-1a of result_yaml().
  std::uint64_t hash() const;
};

/// Desk setting: t=0, s=0.5, r=0.01, kappa=1, m=0.2, lambda=0.25, y0=0.25, rho=-0.5, default vol map.
RunConfig desk_defaults();

/// Parses YAML text on top of desk_defaults(); unknown keys are rejected.
RunConfig parse(const std::string& yaml_text);
RunConfig load(const std::string& path);

}  // namespace fwdsmile::config
