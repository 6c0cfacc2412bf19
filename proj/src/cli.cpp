#include "fwdsmile/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fwdsmile/asymptotics.hpp"
#include "fwdsmile/blackscholes.hpp"
#include "fwdsmile/forward_smile.hpp"
#include "fwdsmile/mc_engine.hpp"

namespace fwdsmile::cli {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string num(std::size_t v) { return std::to_string(v); }

std::string header_comment(const config::RunConfig& cfg) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "# fwdsmile %s config_hash=%016llx seed=%llu", FWDSMILE_VERSION,
                static_cast<unsigned long long>(cfg.hash()), static_cast<unsigned long long>(cfg.mc.seed));
  return buf;
}

class Csv {
 public:
  Csv(const config::RunConfig& cfg, const std::string& name, const std::vector<std::string>& columns)
      : path_((std::filesystem::path(cfg.output.directory) / (cfg.output.prefix + name)).string()),
        out_(path_, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + path_);
    out_ << header_comment(cfg) << "\n";
    row(columns);
  }

  void comment(const std::string& text) { out_ << "# " << text << "\n"; }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

  std::string close() {
    out_.close();
    if (!out_) throw std::runtime_error("write failed for " + path_);
    return path_;
  }

 private:
  std::string path_;
  std::ofstream out_;
};

void prepare_output(const config::RunConfig& cfg) {
  std::filesystem::create_directories(cfg.output.directory);
  const auto path = std::filesystem::path(cfg.output.directory) / (cfg.output.prefix + "resolved_config.yaml");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << header_comment(cfg) << "\n" << cfg.resolved_yaml();
}

mc::PathBatch forward_batch(const config::RunConfig& cfg, const std::vector<double>& maturities) {
  const auto grid = SimGrid::build(cfg.contract.t, cfg.contract.s, maturities, cfg.mc.steps_per_year,
                                   cfg.mc.min_forward_steps);
  return mc::PathBatch(cfg.model, grid, cfg.mc.n_paths, cfg.mc.seed, cfg.mc.scheme, cfg.mc.threads);
}

std::vector<double> alphas_for(const config::RunConfig& cfg, double maturity, bool smile_grid) {
  if (!cfg.contract.alphas.empty()) return cfg.contract.alphas;
  const double atm = smile::atm_alpha(cfg.contract.s, maturity, cfg.model.rate);
  if (!smile_grid) return {atm};
  std::vector<double> out;
  for (int k = -5; k <= 5; ++k) out.push_back(atm + 0.02 * k);
  return out;
}

const char* method_name(asym::Term1Method m) {
  return m == asym::Term1Method::Quadrature ? "quadrature" : "nested_mc";
}

void write_curvature_terms(Csv& csv, const asym::CurvatureLimit& c) {
  csv.comment(std::string("term1_method=") + method_name(c.term1_method) +
              " term1_quadrature_error=" + num(c.term1_abs_error));
  const std::pair<const char*, const McEstimate*> rows[] = {
      {"term1", &c.term1}, {"term2", &c.term2}, {"term3", &c.term3}, {"term4", &c.term4},
      {"rewritten_term4", &c.rewritten_term4}, {"total", &c.total}};
  for (const auto& [name, est] : rows) csv.row({name, num(est->value), num(est->std_error)});
}

}  // namespace

void apply_overrides(config::RunConfig& cfg, std::optional<std::uint64_t> seed_flag,
                     std::optional<std::string> out_flag) {
  if (seed_flag) {
    cfg.mc.seed = *seed_flag;
  } else if (const char* env = std::getenv("FWDSMILE_SEED")) {
    try {
      std::size_t used = 0;
      cfg.mc.seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw config::ConfigError(std::string("FWDSMILE_SEED: not an unsigned integer: ") + env);
    }
  }
  if (const char* env = std::getenv("FWDSMILE_THREADS")) {
    try {
      std::size_t used = 0;
      const unsigned long n = std::stoul(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
      cfg.mc.threads = static_cast<unsigned>(n);
    } catch (const std::exception&) {
      throw config::ConfigError(std::string("FWDSMILE_THREADS: not an unsigned integer: ") + env);
    }
  }
  if (out_flag) cfg.output.directory = *out_flag;
}

CommandResult cmd_price(const config::RunConfig& cfg) {
  prepare_output(cfg);
  const auto maturities = cfg.contract.resolved_maturities();
  const auto batch = forward_batch(cfg, maturities);
  const auto sample = mc::sample_forward(batch, cfg.contract.s, maturities);
  Csv csv(cfg, "price.csv",
          {"T", "gap", "alpha", "mc_price", "mc_se", "decomp_price", "decomp_se", "bs_term", "forward_term",
           "start_term", "z", "closed_form"});
  for (std::size_t k = 0; k < maturities.size(); ++k) {
    const double T = maturities[k];
    for (double a : alphas_for(cfg, T, false)) {
      const auto direct = mc::price_forward_start(sample, k, a);
      const ContractSpec contract{cfg.contract.t, cfg.contract.s, T, a};
      const auto dec = mc::price_decomposition(batch, contract);
      const double z = z_score(direct.value, direct.std_error, dec.total.value, dec.total.std_error);
      double closed = NAN;
      if (cfg.model.is_constant()) {
        closed = bs::forward_start_price(cfg.model.x0, cfg.contract.s, T, a,
                                         std::get<models::ConstantVol>(cfg.model.vol).sigma, cfg.model.rate);
      }
      csv.row({num(T), num(T - cfg.contract.s), num(a), num(direct.value), num(direct.std_error),
               num(dec.total.value), num(dec.total.std_error), num(dec.bs_term.value),
               num(dec.forward_term.value), num(dec.start_term.value), num(z), num(closed)});
    }
  }
  return {{csv.close()}, true};
}

CommandResult cmd_smile(const config::RunConfig& cfg) {
  prepare_output(cfg);
  const auto maturities = cfg.contract.resolved_maturities();
  const auto batch = forward_batch(cfg, maturities);
  const auto sample = mc::sample_forward(batch, cfg.contract.s, maturities);
  Csv csv(cfg, "smile.csv",
          {"T", "gap", "alpha", "vol", "vol_se", "price", "price_se", "at_lower_bound", "error"});
  for (std::size_t k = 0; k < maturities.size(); ++k) {
    const double T = maturities[k];
    const auto alphas = alphas_for(cfg, T, true);
    for (const auto& p : smile::smile_slice(sample, k, alphas)) {
      csv.row({num(T), num(T - cfg.contract.s), num(p.alpha), num(p.vol), num(p.vol_se), num(p.price.value),
               num(p.price.std_error), p.at_lower_bound ? "1" : "0", "\"" + p.error + "\""});
    }
  }
  return {{csv.close()}, true};
}

namespace {

std::vector<std::string> write_study(const config::RunConfig& cfg, const smile::ConvergenceStudy& st) {
  Csv rows(cfg, "converge.csv",
           {"gap", "level", "level_se", "skew", "skew_se", "curv", "curv_se", "scaled_curv", "h", "n_paths",
            "seed"});
  for (const auto& r : st.reports) {
    rows.row({num(r.gap), num(r.level.value), num(r.level.std_error), num(r.skew.value), num(r.skew.std_error),
              num(r.curvature.value), num(r.curvature.std_error), num(r.scaled_curvature.value), num(r.h),
              num(r.n_paths), std::to_string(r.seed)});
  }
  Csv ex(cfg, "converge_extrapolation.csv", {"quantity", "value", "se", "gap_coarse", "gap_fine"});
  const auto& e = st.extrapolated;
  ex.comment(std::string("scaled_curvature_bounded=") + (st.scaled_curvature_bounded ? "1" : "0"));
  for (const auto& w : st.warnings) ex.comment("warning: " + w);
  const std::pair<const char*, const McEstimate*> items[] = {
      {"level", &e.level}, {"skew", &e.skew}, {"scaled_curvature", &e.scaled_curvature}};
  for (const auto& [name, est] : items) {
    ex.row({name, num(est->value), num(est->std_error), num(e.gap_coarse), num(e.gap_fine)});
  }
  return {rows.close(), ex.close()};
}

}  // namespace

CommandResult cmd_converge(const config::RunConfig& cfg) {
  prepare_output(cfg);
  const auto st =
      smile::convergence_study(cfg.model, cfg.contract.t, cfg.contract.s, cfg.contract.gaps, cfg.mc, cfg.fd);
  return {write_study(cfg, st), true};
}

CommandResult cmd_limits(const config::RunConfig& cfg) {
  prepare_output(cfg);
  const auto rep = asym::limits(cfg.model, cfg.contract.t, cfg.contract.s, cfg.mc, cfg.inner);
  Csv csv(cfg, "limits.csv", {"quantity", "value", "se"});
  for (const auto& w : rep.warnings) csv.comment("warning: " + w);
  csv.comment("excluded=" + num(rep.excluded) + " correction_dual_z=" + num(rep.correction.dual_z));
  const std::pair<const char*, const McEstimate*> items[] = {
      {"mean_sigma_s", &rep.mean_sigma_s},
      {"correction_e", &rep.correction.value},
      {"correction_e_general", &rep.correction.general_form},
      {"level", &rep.level},
      {"skew", &rep.skew},
      {"scaled_curvature", &rep.curvature.total}};
  for (const auto& [name, est] : items) csv.row({name, num(est->value), num(est->std_error)});
  Csv terms(cfg, "curvature_terms.csv", {"term", "value", "se"});
  write_curvature_terms(terms, rep.curvature);
  return {{csv.close(), terms.close()}, true};
}

CommandResult cmd_compare(const config::RunConfig& cfg) {
  prepare_output(cfg);
  const auto cmp = asym::compare(cfg.model, cfg.contract.t, cfg.contract.s, cfg.contract.gaps, cfg.mc, cfg.fd,
                                 cfg.inner);
  Csv csv(cfg, "compare.csv",
          {"quantity", "fd", "fd_se", "limit", "limit_se", "combined_se", "z", "pass"});
  csv.comment("limit_seed=" + std::to_string(asym::limits_seed(cfg.mc.seed)));
  for (const auto& w : cmp.study.warnings) csv.comment("warning: " + w);
  for (const auto& w : cmp.limits.warnings) csv.comment("warning: " + w);
  for (const auto& r : cmp.rows) {
    csv.row({r.quantity, num(r.fd.value), num(r.fd.std_error), num(r.limit.value), num(r.limit.std_error),
             num(r.combined_se), num(r.z), r.pass ? "1" : "0"});
  }
  Csv terms(cfg, "compare_curvature_terms.csv", {"term", "value", "se"});
  write_curvature_terms(terms, cmp.limits.curvature);
  auto files = write_study(cfg, cmp.study);
  files.insert(files.begin(), {csv.close(), terms.close()});
  return {files, cmp.all_pass()};
}

CommandResult run_command(const std::string& command, const config::RunConfig& cfg) {
  if (command == "price") return cmd_price(cfg);
  if (command == "smile") return cmd_smile(cfg);
  if (command == "converge") return cmd_converge(cfg);
  if (command == "limits") return cmd_limits(cfg);
  if (command == "compare") return cmd_compare(cfg);
  throw std::invalid_argument("unknown subcommand " + command);
}

int main(int argc, char** argv) {
  CLI::App app{"Forward-start option pricing and forward smile asymptotics"};
  app.set_version_flag("--version", std::string(FWDSMILE_VERSION));
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool strict = false;
  app.add_option("command", command, "price | smile | converge | limits | compare")
      ->required()
      ->check(CLI::IsMember({"price", "smile", "converge", "limits", "compare"}));
  app.add_option("config", config_path, "YAML run configuration")->required();
  app.add_option("--seed", seed, "override mc.seed");
  app.add_option("--out", out, "override output.directory");
  app.add_flag("--strict", strict, "exit with code 3 when a comparison row fails");

  auto error_record = [&](const char* kind, const std::string& message) {
    nlohmann::json rec{{"error", kind}, {"command", command}, {"message", message}};
    std::cerr << rec.dump() << "\n";
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    error_record("usage", e.what());
    return kUsage;
  }

  try {
    auto cfg = config::load(config_path);
    apply_overrides(cfg, seed, out);
    cfg.validate();
    const auto result = run_command(command, cfg);
    for (const auto& f : result.files) std::cout << f << "\n";
    if (strict && !result.comparisons_pass) {
      error_record("comparison_failed", "at least one comparison row has |z| >= 3");
      return kComparisonFailed;
    }
    return kOk;
  } catch (const config::ConfigError& e) {
    error_record("config", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    error_record("runtime", e.what());
    return kFailure;
  }
}

}  // namespace fwdsmile::cli
