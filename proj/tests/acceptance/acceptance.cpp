// Acceptance runs at desk scale. Each criterion prints its checks and one
// summary line "criterion N: PASS|FAIL"; the exit code is nonzero on failure.

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fwdsmile/asymptotics.hpp"
#include "fwdsmile/blackscholes.hpp"
#include "fwdsmile/cli.hpp"
#include "fwdsmile/config.hpp"
#include "fwdsmile/forward_smile.hpp"
#include "fwdsmile/mc_engine.hpp"

namespace {

using namespace fwdsmile;

const std::vector<double> kGaps = {0.2, 0.1, 0.05, 0.025};
constexpr double kS = 0.5;

class Report {
 public:
  void check(bool ok, const char* fmt, ...) __attribute__((format(printf, 3, 4))) {
    char buf[512];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    std::printf("  [%s] %s\n", ok ? "ok" : "FAIL", buf);
    pass_ = pass_ && ok;
  }
  void note(const std::string& text) { std::printf("  %s\n", text.c_str()); }
  bool pass() const { return pass_; }

 private:
  bool pass_ = true;
};

models::ModelSpec desk_model(double rho = -0.5) {
  auto m = config::desk_defaults().model;
  m.rho = rho;
  return m;
}

models::ModelSpec constant_vol(double sigma) {
  auto m = desk_model();
  m.vol = models::ConstantVol{sigma};
  return m;
}

smile::McConfig desk_mc(std::size_t n_paths = 200000) {
  smile::McConfig c;
  c.n_paths = n_paths;
  return c;
}

std::vector<double> maturities() {
  std::vector<double> out;
  for (double g : kGaps) out.push_back(kS + g);
  return out;
}

mc::PathBatch desk_batch(const models::ModelSpec& model, const smile::McConfig& c) {
  const auto grid = SimGrid::build(0.0, kS, maturities(), c.steps_per_year, c.min_forward_steps);
  return mc::PathBatch(model, grid, c.n_paths, c.seed, c.scheme, c.threads);
}

void print_row(Report& rep, const asym::ComparisonRow& r) {
  rep.check(r.pass, "%-16s fd=%.6g (se %.3g) limit=%.6g (se %.3g) z=%.2f", r.quantity.c_str(), r.fd.value,
            r.fd.std_error, r.limit.value, r.limit.std_error, r.z);
}

const asym::ComparisonRow& row(const asym::Comparison& c, const std::string& q) {
  for (const auto& r : c.rows) {
    if (r.quantity == q) return r;
  }
  throw std::runtime_error("missing comparison row " + q);
}

void print_study(Report& rep, const smile::ConvergenceStudy& st) {
  for (const auto& r : st.reports) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "gap=%-6g level=%.5f(%.2g) skew=%.4f(%.2g) scaled_curv=%.4f(%.2g) h=%.3g", r.gap,
                  r.level.value, r.level.std_error, r.skew.value, r.skew.std_error, r.scaled_curvature.value,
                  r.scaled_curvature.std_error, r.h);
    rep.note(buf);
  }
  for (const auto& w : st.warnings) rep.note("warning: " + w);
}

// 1. Constant-vol prices, flat smile, zero skew and curvature.
bool criterion1(Report& rep) {
  const double sigma = 0.2;
  const auto model = constant_vol(sigma);
  const auto c = desk_mc();
  const auto batch = desk_batch(model, c);
  const auto mats = maturities();
  const auto sample = mc::sample_forward(batch, kS, mats);
  for (std::size_t k = 0; k < mats.size(); ++k) {
    const double a = smile::atm_alpha(kS, mats[k], model.rate);
    const auto price = mc::price_forward_start(sample, k, a);
    const double exact = bs::forward_start_price(model.x0, kS, mats[k], a, sigma, model.rate);
    const double z = z_score(price.value, price.std_error, exact, 0.0);
    rep.check(std::abs(z) < 3, "gap=%g price mc=%.8f se=%.2g closed=%.8f z=%.2f", kGaps[k], price.value,
              price.std_error, exact, z);
    const auto p = smile::implied_forward_vol(price, model.x0, kS, mats[k], a, model.rate);
    rep.check(p.ok() && std::abs(p.vol - sigma) < 1e-3, "gap=%g implied vol=%.6f se=%.2g |I-0.2|=%.2g", kGaps[k],
              p.vol, p.vol_se, std::abs(p.vol - sigma));
    const auto d = smile::atm_derivatives(sample, k, smile::FdRule{});
    rep.check(std::abs(d.skew.value) < 3 * d.skew.std_error, "gap=%g skew=%.4g se=%.2g", kGaps[k], d.skew.value,
              d.skew.std_error);
    rep.check(std::abs(d.curvature.value) < 3 * d.curvature.std_error, "gap=%g curvature=%.4g se=%.2g", kGaps[k],
              d.curvature.value, d.curvature.std_error);
  }
  return rep.pass();
}

// 2. Direct price against the decomposition; the [t,s] correction dominates as the gap shrinks.
bool criterion2(Report& rep) {
  const auto model = desk_model();
  const auto c = desk_mc();
  const auto batch = desk_batch(model, c);
  double prev_ratio = 0.0;
  for (std::size_t k = 0; k < kGaps.size(); ++k) {
    const double T = kS + kGaps[k];
    const ContractSpec contract{0.0, kS, T, smile::atm_alpha(kS, T, model.rate)};
    const auto direct = mc::price_forward_start(batch, contract);
    const auto dec = mc::price_decomposition(batch, contract);
    const double z = z_score(direct.value, direct.std_error, dec.total.value, dec.total.std_error);
    const double ratio = std::abs(dec.start_term.value / dec.forward_term.value);
    const bool gap_check = kGaps[k] == 0.1 ? std::abs(z) < 3 : true;
    rep.check(gap_check, "gap=%g direct=%.7f(%.2g) decomposition=%.7f(%.2g) z=%.2f%s", kGaps[k], direct.value,
              direct.std_error, dec.total.value, dec.total.std_error, z, kGaps[k] == 0.1 ? "" : " (reported)");
    rep.check(dec.forward_term.value != 0.0 && dec.start_term.value != 0.0 && ratio > prev_ratio,
              "gap=%g bs=%.7f forward=%.3g start=%.3g |start/forward|=%.3f", kGaps[k], dec.bs_term.value,
              dec.forward_term.value, dec.start_term.value, ratio);
    prev_ratio = ratio;
  }
  return rep.pass();
}

// 3. Level: extrapolated ATM vol against E(sigma_s) + rho E_{t,s}, and against E(sigma_s) at rho = 0.
bool criterion3(Report& rep) {
  for (double rho : {-0.5, 0.0}) {
    const auto cmp = asym::compare(desk_model(rho), 0.0, kS, kGaps, desk_mc());
    rep.note("rho=" + std::to_string(rho));
    print_study(rep, cmp.study);
    const auto& r = row(cmp, "level");
    print_row(rep, r);
    if (rho == 0.0) {
      rep.check(r.limit.value == cmp.limits.mean_sigma_s.value, "rho=0 level limit equals E(sigma_s)=%.6f",
                cmp.limits.mean_sigma_s.value);
    }
  }
  return rep.pass();
}

// 4. Skew against its limit; sign follows rho; exact null at rho = 0.
bool criterion4(Report& rep) {
  const auto model = desk_model();
  const auto cmp = asym::compare(model, 0.0, kS, kGaps, desk_mc());
  print_study(rep, cmp.study);
  const auto& r = row(cmp, "skew");
  print_row(rep, r);
  rep.check(std::signbit(r.fd.value) == std::signbit(model.rho) &&
                std::signbit(r.limit.value) == std::signbit(model.rho),
            "sign(skew fd)=sign(skew limit)=sign(rho)");
  const auto null = smile::convergence_study(desk_model(0.0), 0.0, kS, kGaps, desk_mc());
  for (const auto& g : null.reports) {
    rep.check(std::abs(g.skew.value) < 3 * g.skew.std_error, "rho=0 gap=%g skew=%.4g se=%.2g", g.gap,
              g.skew.value, g.skew.std_error);
  }
  return rep.pass();
}

// 5. Scaled curvature bounded and matching its limit; exact zero under constant vol.
bool criterion5(Report& rep) {
  const auto cmp = asym::compare(desk_model(), 0.0, kS, kGaps, desk_mc(1000000));
  print_study(rep, cmp.study);
  rep.check(cmp.study.scaled_curvature_bounded, "scaled curvature bounded along the gaps (ratio <= %.1f)",
            smile::kBoundedRatio);
  const auto& r = row(cmp, "scaled_curvature");
  print_row(rep, r);
  const auto& t = cmp.limits.curvature;
  char buf[256];
  std::snprintf(buf, sizeof buf, "terms: 1=%.5f 2=%.5f 3=%.5f 4=%.5f (rewritten 4=%.4f) quad_err=%.2g", t.term1.value,
                t.term2.value, t.term3.value, t.term4.value, t.rewritten_term4.value, t.term1_abs_error);
  rep.note(buf);
  const auto cv = asym::limits(constant_vol(0.2), 0.0, kS, desk_mc(1000));
  rep.check(std::abs(cv.curvature.total.value) <= 1e-14, "constant vol curvature limit = %.3g",
            cv.curvature.total.value);

  // Diagnostic only, not part of the verdict: the same comparison with the vol kept far from its floor.
  auto far = desk_model();
  std::get<models::ExtendedSteinStein>(far.vol).ou = {1.0, 0.6, 0.25, 0.6};
  const auto diag = asym::compare(far, 0.0, kS, kGaps, desk_mc());
  for (const auto& d : diag.rows) {
    std::snprintf(buf, sizeof buf, "diagnostic m=y0=0.6: %-16s fd=%.5g (se %.2g) limit=%.5g (se %.2g) z=%.2f",
                  d.quantity.c_str(), d.fd.value, d.fd.std_error, d.limit.value, d.limit.std_error, d.z);
    rep.note(buf);
  }
  return rep.pass();
}

// 6. Dual formula for E_{t,s} on the desk setting and perturbed sets; linear vanishing in lambda.
bool criterion6(Report& rep) {
  struct Variant {
    const char* name;
    std::function<void(models::ModelSpec&)> apply;
  };
  auto ou = [](models::ModelSpec& m) -> models::OuParams& {
    return std::get<models::ExtendedSteinStein>(m.vol).ou;
  };
  const std::vector<Variant> variants = {
      {"desk", [](models::ModelSpec&) {}},
      {"kappa=2", [&](models::ModelSpec& m) { ou(m).kappa = 2.0; }},
      {"m=0.3,y0=0.3", [&](models::ModelSpec& m) { ou(m).m = 0.3; ou(m).y0 = 0.3; }},
      {"lambda=0.4", [&](models::ModelSpec& m) { ou(m).lambda = 0.4; }},
      {"rho=-0.8", [](models::ModelSpec& m) { m.rho = -0.8; }},
      {"r=0.05,y0=0.15", [&](models::ModelSpec& m) { m.rate = 0.05; ou(m).y0 = 0.15; }},
  };
  for (const auto& v : variants) {
    auto m = desk_model();
    v.apply(m);
    const auto e = asym::correction_e(m, 0.0, kS, desk_mc());
    rep.check(std::abs(e.dual_z) < 3, "%-15s E map=%.6f(%.2g) general=%.6f(%.2g) z=%.2f", v.name, e.value.value,
              e.value.std_error, e.general_form.value, e.general_form.std_error, e.dual_z);
  }
  std::vector<double> xs, ys;
  for (double lambda : {0.05, 0.1, 0.15, 0.2, 0.25}) {
    auto m = desk_model();
    ou(m).lambda = lambda;
    const auto e = asym::correction_e(m, 0.0, kS, desk_mc());
    xs.push_back(lambda);
    ys.push_back(e.value.value);
    char buf[128];
    std::snprintf(buf, sizeof buf, "lambda=%.2f E=%.6f(%.2g)", lambda, e.value.value, e.value.std_error);
    rep.note(buf);
  }
  const double n = xs.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i] / n;
    my += ys[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double slope = sxy / sxx, intercept = my - slope * mx, r2 = sxy * sxy / (sxx * syy);
  rep.check(r2 > 0.99, "linear fit E = %.5f + %.5f lambda, R^2=%.5f", intercept, slope, r2);
  return rep.pass();
}

// 7. Numerical kernels: implied vol, Greeks of G, OU transition, martingale.
bool criterion7(Report& rep) {
  std::mt19937_64 gen(20240601);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double sigma = 0.01 + 1.99 * u01(gen);
    const double tau = std::exp(std::log(1e-3) + (std::log(5.0) - std::log(1e-3)) * u01(gen));
    const double r = 0.05 * u01(gen);
    const double w = sigma * std::sqrt(tau);
    const double k = std::exp(r * tau + w * (-3.0 + 6.0 * u01(gen)));
    const auto res = bs::implied_vol(bs::call({tau, 0.0, k, sigma, r}), tau, 0.0, k, r);
    worst = std::max(worst, std::abs(res.vol - sigma));
  }
  rep.check(worst < 1e-8, "implied vol round trip over 1e4 cases: max error %.3g", worst);

  // Oracle: central differences with steps scaled to sigma sqrt(tau), Richardson-extrapolated to O(h^4).
  auto d1 = [](const std::function<double(double)>& fn, double x, double h) {
    auto c = [&](double hh) { return (fn(x + hh) - fn(x - hh)) / (2 * hh); };
    return (4 * c(h / 2) - c(h)) / 3;
  };
  auto d2 = [](const std::function<double(double)>& fn, double x, double h) {
    auto c = [&](double hh) { return (fn(x + hh) - 2 * fn(x) + fn(x - hh)) / (hh * hh); };
    return (4 * c(h / 2) - c(h)) / 3;
  };
  double worst_rel = 0.0;
  for (double tau : {0.02, 0.1, 0.5}) {
    for (double k0 : {-0.1, 0.0, 0.1}) {
      const bs::BsInputs in(tau, 0.0, std::exp(k0), 0.25, 0.01);
      const double h = 0.02 * 0.25 * std::sqrt(tau);
      const std::function<double(double)> call_x = [&](double x) { return bs::call(in.with_log_spot(x)); };
      const std::function<double(double)> g_x = [&](double x) { return bs::g_function(in.with_log_spot(x)); };
      const std::function<double(double)> g_k = [&](double k) { return bs::g_function(in.with_strike(std::exp(k))); };
      const std::function<double(double)> dkg_k = [&](double k) { return bs::dk_g(in.with_strike(std::exp(k))); };
      const std::pair<double, double> pairs[] = {{bs::g_function(in), d2(call_x, 0.0, h) - d1(call_x, 0.0, h)},
                                                 {bs::h_function(in), d1(g_x, 0.0, h)},
                                                 {bs::dk_g(in), d1(g_k, k0, h)},
                                                 {bs::dkk_g(in), d1(dkg_k, k0, h)}};
      for (const auto& [exact, fd] : pairs) {
        worst_rel = std::max(worst_rel, std::abs(exact - fd) / std::max(1.0, std::abs(exact)));
      }
    }
  }
  rep.check(worst_rel < 1e-6, "G, H, dk G, dkk G against finite differences: max relative error %.3g", worst_rel);

  const auto model = desk_model();
  const auto& p = model.stein_stein()->ou;
  const auto ou_grid = SimGrid::build(0.0, kS, {kS + 0.1}, 4.0, 1);
  const mc::PathBatch ou_batch(model, ou_grid, 1000000, 7, mc::OuScheme::Exact);
  std::vector<double> ys(ou_batch.n_paths()), sq(ou_batch.n_paths());
  const std::size_t is = ou_grid.s_index();
  ou_batch.for_each_path([&](std::size_t i, const mc::SimPath& path) { ys[i] = path.y[is]; });
  const double mean = models::ou_mean(p, p.y0, 0.0, kS), var = models::ou_variance(p, 0.0, kS);
  const auto em = mean_estimate(ys, 7);
  for (std::size_t i = 0; i < ys.size(); ++i) sq[i] = (ys[i] - em.value) * (ys[i] - em.value);
  const auto ev = mean_estimate(sq, 7);
  rep.check(std::abs(em.value - mean) < 3 * em.std_error, "OU exact transition mean %.6f vs %.6f (se %.2g)",
            em.value, mean, em.std_error);
  rep.check(std::abs(ev.value - var) < 3 * ev.std_error, "OU exact transition variance %.6f vs %.6f (se %.2g)",
            ev.value, var, ev.std_error);

  const auto batch = desk_batch(model, desk_mc());
  const double T = kS + kGaps.front();
  const std::size_t iT = batch.grid().index_of(T);
  std::vector<double> disc(batch.n_paths());
  batch.for_each_path([&](std::size_t i, const mc::SimPath& path) { disc[i] = std::exp(path.x[iT] - model.rate * T); });
  const auto mart = mean_estimate(disc, batch.seed());
  rep.check(std::abs(mart.value - std::exp(model.x0)) < 3 * mart.std_error,
            "martingale E[e^(X_T - rT)] = %.6f (se %.2g) vs e^x0 = 1", mart.value, mart.std_error);
  return rep.pass();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 8. Byte-identical CSVs across reruns and worker counts.
bool criterion8(Report& rep) {
  auto base = config::desk_defaults();
  base.mc.n_paths = 20000;
  const auto root = std::filesystem::temp_directory_path() / "fwdsmile_acceptance_c8";
  std::filesystem::remove_all(root);
  for (const char* cmd : {"price", "smile", "converge", "limits", "compare"}) {
    std::vector<std::vector<std::string>> runs;
    for (unsigned threads : {1u, 4u, 4u}) {
      auto cfg = base;
      cfg.mc.threads = threads;
      cfg.output.directory = (root / (std::string(cmd) + "_" + std::to_string(runs.size()))).string();
      std::vector<std::string> contents;
      for (const auto& f : cli::run_command(cmd, cfg).files) contents.push_back(slurp(f));
      runs.push_back(contents);
    }
    const bool same = runs[0] == runs[1] && runs[1] == runs[2] && !runs[0].empty();
    rep.check(same, "%-8s %zu file(s) byte-identical for 1 worker, 4 workers and a 4-worker rerun", cmd,
              runs[0].size());
  }
  std::filesystem::remove_all(root);
  return rep.pass();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria at desk scale"};
  std::vector<int> which;
  app.add_option("--criterion", which, "criterion numbers to run (default: all)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);
  if (which.empty()) which = {1, 2, 3, 4, 5, 6, 7, 8};

  const std::function<bool(Report&)> criteria[] = {criterion1, criterion2, criterion3, criterion4,
                                                   criterion5, criterion6, criterion7, criterion8};
  bool all = true;
  for (int n : which) {
    Report rep;
    const auto start = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = criteria[n - 1](rep);
    } catch (const std::exception& e) {
      rep.check(false, "error: %s", e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d: %s (%.1f s)\n", n, ok ? "PASS" : "FAIL", secs);
    std::fflush(stdout);
    all = all && ok;
  }
  return all ? 0 : 1;
}
