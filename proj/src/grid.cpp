#include "fwdsmile/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace fwdsmile {

namespace {

constexpr double kNodeTol = 1e-12;

std::size_t step_count(double length, double max_step) {
  const double n = std::ceil(length / max_step - 1e-9);
  return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

void append_segment(std::vector<double>& nodes, double from, double to, double max_step) {
  const std::size_t n = step_count(to - from, max_step);
  const double h = (to - from) / static_cast<double>(n);
  for (std::size_t j = 1; j < n; ++j) nodes.push_back(from + static_cast<double>(j) * h);
  nodes.push_back(to);
}

}  // namespace

void ContractSpec::validate() const {
  if (!std::isfinite(t) || !std::isfinite(s) || !std::isfinite(maturity) || !std::isfinite(alpha)) {
    throw std::invalid_argument("ContractSpec: non-finite field");
  }
  if (!(t <= s)) throw std::invalid_argument("ContractSpec: requires t <= s");
  if (!(s < maturity)) throw std::invalid_argument("ContractSpec: requires s < T");
}

SimGrid SimGrid::build(double t0, double s, std::vector<double> maturities, double steps_per_year,
                       int min_forward_steps) {
  if (!std::isfinite(t0) || !std::isfinite(s) || !(t0 <= s)) {
    throw std::invalid_argument("SimGrid: requires finite t0 <= s");
  }
  if (!(steps_per_year > 0.0) || !std::isfinite(steps_per_year)) {
    throw std::invalid_argument("SimGrid: steps_per_year must be > 0");
  }
  if (min_forward_steps < 0) throw std::invalid_argument("SimGrid: min_forward_steps must be >= 0");
  std::sort(maturities.begin(), maturities.end());
  maturities.erase(std::unique(maturities.begin(), maturities.end(),
                               [](double a, double b) { return std::abs(a - b) <= kNodeTol; }),
                   maturities.end());
  for (double m : maturities) {
    if (!std::isfinite(m) || !(m > s)) throw std::invalid_argument("SimGrid: maturities must exceed s");
  }

  SimGrid g;
  g.t0_ = t0;
  g.s_ = s;
  g.steps_per_year_ = steps_per_year;
  g.min_forward_steps_ = min_forward_steps;
  g.maturities_ = maturities;

  const double base_step = 1.0 / steps_per_year;
  g.nodes_.push_back(t0);
  if (s > t0) append_segment(g.nodes_, t0, s, base_step);
  g.s_index_ = g.nodes_.size() - 1;

  double prev = s;
  for (double m : maturities) {
    double step = base_step;
    if (min_forward_steps > 0) step = std::min(step, (m - s) / min_forward_steps);
    append_segment(g.nodes_, prev, m, step);
    prev = m;
  }
  return g;
}

std::size_t SimGrid::index_of(double time) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), time - kNodeTol);
  if (it == nodes_.end() || std::abs(*it - time) > kNodeTol) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "SimGrid: time %.17g is not a grid node", time);
    throw std::invalid_argument(buf);
  }
  return static_cast<std::size_t>(it - nodes_.begin());
}

bool SimGrid::has_node(double time) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), time - kNodeTol);
  return it != nodes_.end() && std::abs(*it - time) <= kNodeTol;
}

std::string SimGrid::canonical() const {
  char buf[160];
  std::snprintf(buf, sizeof buf, "t0=%.17g;s=%.17g;spy=%.17g;mfs=%d;nodes=%zu;T=", t0_, s_,
                steps_per_year_, min_forward_steps_, nodes_.size());
  std::string out = buf;
  for (double m : maturities_) {
    std::snprintf(buf, sizeof buf, "%.17g,", m);
    out += buf;
  }
  return out;
}

}  // namespace fwdsmile
