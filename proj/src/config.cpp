#include "fwdsmile/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace fwdsmile::config {

namespace {

void check_keys(const YAML::Node& node, const std::string& where, const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw ConfigError(where + ": expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& where) {
  const auto v = node[key];
  if (!v) return;
  try {
    out = v.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where + "." + key + ": bad value");
  }
}

void read_list(const YAML::Node& node, const char* key, std::vector<double>& out, const std::string& where) {
  const auto v = node[key];
  if (!v) return;
  try {
    if (v.IsSequence()) {
      out = v.as<std::vector<double>>();
    } else {
      out = {v.as<double>()};
    }
  } catch (const YAML::Exception&) {
    throw ConfigError(where + "." + key + ": expected a number or a list of numbers");
  }
}

models::VolFunction parse_vol_function(const YAML::Node& node) {
  std::string type = "smoothed_abs";
  if (node["type"]) type = node["type"].as<std::string>();
  double eps = 1e-3, lo = 0.01, hi = 2.0;
  if (type == "identity") {
    check_keys(node, "model.vol.f", {"type"});
    return models::VolFunction::identity();
  }
  if (type == "abs_clamped") {
    check_keys(node, "model.vol.f", {"type", "sigma_min", "sigma_max"});
    read(node, "sigma_min", lo, "model.vol.f");
    read(node, "sigma_max", hi, "model.vol.f");
    return models::VolFunction::abs_clamped(lo, hi);
  }
  if (type == "smoothed_abs") {
    check_keys(node, "model.vol.f", {"type", "eps", "sigma_min", "sigma_max"});
    read(node, "eps", eps, "model.vol.f");
    read(node, "sigma_min", lo, "model.vol.f");
    read(node, "sigma_max", hi, "model.vol.f");
    return models::VolFunction::smoothed_abs(eps, lo, hi);
  }
  throw ConfigError("model.vol.f.type: unknown vol map '" + type + "'");
}

void parse_model(const YAML::Node& node, models::ModelSpec& model) {
  check_keys(node, "model", {"rate", "rho", "x0", "vol"});
  read(node, "rate", model.rate, "model");
  read(node, "rho", model.rho, "model");
  read(node, "x0", model.x0, "model");
  const auto vol = node["vol"];
  if (!vol) return;
  std::string type = "stein_stein";
  if (vol["type"]) type = vol["type"].as<std::string>();
  if (type == "constant") {
    check_keys(vol, "model.vol", {"type", "sigma"});
    models::ConstantVol c;
    read(vol, "sigma", c.sigma, "model.vol");
    model.vol = c;
  } else if (type == "stein_stein") {
    check_keys(vol, "model.vol", {"type", "kappa", "m", "lambda", "y0", "f"});
    models::ExtendedSteinStein ss;
    if (const auto* cur = model.stein_stein()) ss = *cur;
    read(vol, "kappa", ss.ou.kappa, "model.vol");
    read(vol, "m", ss.ou.m, "model.vol");
    read(vol, "lambda", ss.ou.lambda, "model.vol");
    read(vol, "y0", ss.ou.y0, "model.vol");
    if (vol["f"]) ss.f = parse_vol_function(vol["f"]);
    model.vol = ss;
  } else {
    throw ConfigError("model.vol.type: unknown model '" + type + "'");
  }
}

void parse_mc(const YAML::Node& node, RunConfig& cfg) {
  check_keys(node, "mc",
             {"n_paths", "steps_per_year", "min_forward_steps", "seed", "scheme", "threads", "inner"});
  read(node, "n_paths", cfg.mc.n_paths, "mc");
  read(node, "steps_per_year", cfg.mc.steps_per_year, "mc");
  read(node, "min_forward_steps", cfg.mc.min_forward_steps, "mc");
  read(node, "seed", cfg.mc.seed, "mc");
  read(node, "threads", cfg.mc.threads, "mc");
  if (node["scheme"]) {
    const auto s = node["scheme"].as<std::string>();
    if (s == "euler") {
      cfg.mc.scheme = mc::OuScheme::Euler;
    } else if (s == "exact") {
      cfg.mc.scheme = mc::OuScheme::Exact;
    } else {
      throw ConfigError("mc.scheme: expected euler or exact");
    }
  }
  if (const auto in = node["inner"]) {
    check_keys(in, "mc.inner", {"method", "u_nodes", "inner_paths", "outer_paths"});
    if (in["method"]) {
      const auto m = in["method"].as<std::string>();
      if (m == "quadrature") {
        cfg.inner.method = asym::Term1Method::Quadrature;
      } else if (m == "nested_mc") {
        cfg.inner.method = asym::Term1Method::NestedMc;
      } else {
        throw ConfigError("mc.inner.method: expected quadrature or nested_mc");
      }
    }
    read(in, "u_nodes", cfg.inner.u_nodes, "mc.inner");
    read(in, "inner_paths", cfg.inner.inner_paths, "mc.inner");
    read(in, "outer_paths", cfg.inner.outer_paths, "mc.inner");
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt(v[i]);
  }
  return out + "]";
}

const char* f_type(models::VolFunction::Kind k) {
  switch (k) {
    case models::VolFunction::Kind::Identity:
      return "identity";
    case models::VolFunction::Kind::AbsClamped:
      return "abs_clamped";
    case models::VolFunction::Kind::SmoothedAbs:
      return "smoothed_abs";
  }
  return "";
}

}  // namespace

std::vector<double> ContractBlock::resolved_maturities() const {
  if (!maturities.empty()) return maturities;
  std::vector<double> out;
  for (double g : gaps) out.push_back(s + g);
  return out;
}

void RunConfig::validate() const {
  try {
    model.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  if (!(contract.t <= contract.s)) throw ConfigError("contract: requires t <= s");
  if (!std::isfinite(contract.t) || !std::isfinite(contract.s)) throw ConfigError("contract: t and s must be finite");
  for (double m : contract.maturities) {
    if (!(m > contract.s)) throw ConfigError("contract.T: every maturity must exceed s");
  }
  for (std::size_t k = 0; k < contract.gaps.size(); ++k) {
    if (!(contract.gaps[k] > 0.0)) throw ConfigError("contract.gaps: must be > 0");
    if (k > 0 && !(contract.gaps[k] < contract.gaps[k - 1])) {
      throw ConfigError("contract.gaps: must be strictly decreasing");
    }
  }
  if (contract.maturities.empty() && contract.gaps.empty()) {
    throw ConfigError("contract: give T or gaps");
  }
  if (mc.n_paths < 1) throw ConfigError("mc.n_paths: must be >= 1");
  if (!(mc.steps_per_year > 0.0)) throw ConfigError("mc.steps_per_year: must be > 0");
  if (mc.min_forward_steps < 0) throw ConfigError("mc.min_forward_steps: must be >= 0");
  if (inner.u_nodes < 2) throw ConfigError("mc.inner.u_nodes: must be >= 2");
  if (inner.inner_paths < 1 || inner.outer_paths < 1) throw ConfigError("mc.inner: budgets must be >= 1");
  if (!(fd.factor > 0.0) || !(fd.noise_multiple >= 0.0) || !(fd.fixed_h >= 0.0)) {
    throw ConfigError("fd: factor must be > 0, noise_multiple and h >= 0");
  }
  if (output.directory.empty()) throw ConfigError("output.directory: empty");
}

std::string RunConfig::result_yaml() const {
  std::ostringstream os;
  os << "model:\n";
  os << "  rate: " << fmt(model.rate) << "\n";
  os << "  rho: " << fmt(model.rho) << "\n";
  os << "  x0: " << fmt(model.x0) << "\n";
  os << "  vol:\n";
  if (const auto* ss = model.stein_stein()) {
    os << "    type: stein_stein\n";
    os << "    kappa: " << fmt(ss->ou.kappa) << "\n";
    os << "    m: " << fmt(ss->ou.m) << "\n";
    os << "    lambda: " << fmt(ss->ou.lambda) << "\n";
    os << "    y0: " << fmt(ss->ou.y0) << "\n";
    os << "    f:\n";
    os << "      type: " << f_type(ss->f.kind()) << "\n";
    if (ss->f.kind() == models::VolFunction::Kind::SmoothedAbs) os << "      eps: " << fmt(ss->f.eps()) << "\n";
    if (ss->f.bounded()) {
      os << "      sigma_min: " << fmt(ss->f.sigma_min()) << "\n";
      os << "      sigma_max: " << fmt(ss->f.sigma_max()) << "\n";
    }
  } else {
    os << "    type: constant\n";
    os << "    sigma: " << fmt(std::get<models::ConstantVol>(model.vol).sigma) << "\n";
  }
  os << "contract:\n";
  os << "  t: " << fmt(contract.t) << "\n";
  os << "  s: " << fmt(contract.s) << "\n";
  os << "  T: " << fmt_list(contract.maturities) << "\n";
  os << "  gaps: " << fmt_list(contract.gaps) << "\n";
  os << "  alphas: " << fmt_list(contract.alphas) << "\n";
  os << "mc:\n";
  os << "  n_paths: " << mc.n_paths << "\n";
  os << "  steps_per_year: " << fmt(mc.steps_per_year) << "\n";
  os << "  min_forward_steps: " << mc.min_forward_steps << "\n";
  os << "  seed: " << mc.seed << "\n";
  os << "  scheme: " << (mc.scheme == mc::OuScheme::Euler ? "euler" : "exact") << "\n";
  os << "  inner:\n";
  os << "    method: " << (inner.method == asym::Term1Method::Quadrature ? "quadrature" : "nested_mc") << "\n";
  os << "    u_nodes: " << inner.u_nodes << "\n";
  os << "    inner_paths: " << inner.inner_paths << "\n";
  os << "    outer_paths: " << inner.outer_paths << "\n";
  os << "fd:\n";
  os << "  factor: " << fmt(fd.factor) << "\n";
  os << "  noise_multiple: " << fmt(fd.noise_multiple) << "\n";
  os << "  h: " << fmt(fd.fixed_h) << "\n";
  return os.str();
}

std::string RunConfig::resolved_yaml() const {
  std::ostringstream os;
  os << result_yaml();
  os << "output:\n";
  os << "  directory: \"" << output.directory << "\"\n";
  os << "  prefix: \"" << output.prefix << "\"\n";
  return os.str();
}

std::uint64_t RunConfig::hash() const { return models::fnv1a(result_yaml()); }

RunConfig desk_defaults() {
  RunConfig cfg;
  cfg.model.rate = 0.01;
  cfg.model.rho = -0.5;
  cfg.model.x0 = 0.0;
  models::ExtendedSteinStein ss;
  ss.ou = {1.0, 0.2, 0.25, 0.25};
  ss.f = models::VolFunction::make_default();
  cfg.model.vol = ss;
  return cfg;
}

RunConfig parse(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("YAML syntax: ") + e.what());
  }
  RunConfig cfg = desk_defaults();
  if (root.IsNull()) return cfg;
  check_keys(root, "config", {"model", "contract", "mc", "fd", "output"});
  try {
    if (const auto m = root["model"]) parse_model(m, cfg.model);
    if (const auto c = root["contract"]) {
      check_keys(c, "contract", {"t", "s", "T", "gaps", "alphas"});
      read(c, "t", cfg.contract.t, "contract");
      read(c, "s", cfg.contract.s, "contract");
      read_list(c, "T", cfg.contract.maturities, "contract");
      read_list(c, "gaps", cfg.contract.gaps, "contract");
      read_list(c, "alphas", cfg.contract.alphas, "contract");
    }
    if (const auto m = root["mc"]) parse_mc(m, cfg);
    if (const auto f = root["fd"]) {
      check_keys(f, "fd", {"factor", "noise_multiple", "h"});
      read(f, "factor", cfg.fd.factor, "fd");
      read(f, "noise_multiple", cfg.fd.noise_multiple, "fd");
      read(f, "h", cfg.fd.fixed_h, "fd");
    }
    if (const auto o = root["output"]) {
      check_keys(o, "output", {"directory", "prefix"});
      read(o, "directory", cfg.output.directory, "output");
      read(o, "prefix", cfg.output.prefix, "output");
    }
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  cfg.validate();
  return cfg;
}

RunConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace fwdsmile::config
