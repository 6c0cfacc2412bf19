#include <array>
#include <cstring>
#include <fstream>

#include "fwdsmile/mc_engine.hpp"

namespace fwdsmile::mc {

namespace {

constexpr std::array<char, 8> kMagic = {'F', 'W', 'D', 'S', 'P', 'B', '\0', '\1'};
constexpr std::size_t kBlock = 1024;

template <class T>
void put(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("batch summary: truncated file");
  return v;
}

void put_vec(std::ofstream& os, const std::vector<double>& v) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(v.size()));
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_vec(std::ifstream& is) {
  const auto n = get<std::uint32_t>(is);
  std::vector<double> v(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw std::runtime_error("batch summary: truncated file");
  return v;
}

}  // namespace

BatchSummary summarize(const PathBatch& batch) {
  const std::size_t nodes = batch.grid().size();
  const std::size_t n = batch.n_paths();
  const std::size_t blocks = (n + kBlock - 1) / kBlock;

  // Fixed-size blocks merged in block order keep the sums worker-independent.
  struct Sums {
    std::vector<double> x, xx, y, yy;
  };
  std::vector<Sums> partial(blocks);
  parallel_chunks(blocks, batch.threads(), [&](std::size_t b0, std::size_t b1, unsigned) {
    SimPath p;
    for (std::size_t b = b0; b < b1; ++b) {
      Sums s{std::vector<double>(nodes), std::vector<double>(nodes), std::vector<double>(nodes),
             std::vector<double>(nodes)};
      for (std::size_t i = b * kBlock; i < std::min(n, (b + 1) * kBlock); ++i) {
        batch.simulate_path(i, p);
        for (std::size_t j = 0; j < nodes; ++j) {
          s.x[j] += p.x[j];
          s.xx[j] += p.x[j] * p.x[j];
          s.y[j] += p.y[j];
          s.yy[j] += p.y[j] * p.y[j];
        }
      }
      partial[b] = std::move(s);
    }
  });

  BatchSummary out;
  out.seed = batch.seed();
  out.n_paths = n;
  out.model_hash = models::fnv1a(batch.model().canonical());
  out.scheme = static_cast<std::uint32_t>(batch.scheme());
  out.t0 = batch.grid().t0();
  out.s = batch.grid().s();
  out.steps_per_year = batch.grid().steps_per_year();
  out.min_forward_steps = batch.grid().min_forward_steps();
  out.maturities.assign(batch.grid().maturities().begin(), batch.grid().maturities().end());
  out.times.assign(batch.grid().nodes().begin(), batch.grid().nodes().end());
  out.mean_x.assign(nodes, 0.0);
  out.var_x.assign(nodes, 0.0);
  out.mean_y.assign(nodes, 0.0);
  out.var_y.assign(nodes, 0.0);
  std::vector<double> sx(nodes), sxx(nodes), sy(nodes), syy(nodes);
  for (const auto& p : partial) {
    for (std::size_t j = 0; j < nodes; ++j) {
      sx[j] += p.x[j];
      sxx[j] += p.xx[j];
      sy[j] += p.y[j];
      syy[j] += p.yy[j];
    }
  }
  const double dn = static_cast<double>(n);
  for (std::size_t j = 0; j < nodes; ++j) {
    out.mean_x[j] = sx[j] / dn;
    out.mean_y[j] = sy[j] / dn;
    out.var_x[j] = std::max(0.0, sxx[j] / dn - out.mean_x[j] * out.mean_x[j]);
    out.var_y[j] = std::max(0.0, syy[j] / dn - out.mean_y[j] * out.mean_y[j]);
  }
  return out;
}

void write_batch_summary(const BatchSummary& summary, const std::string& filename) {
  std::ofstream os(filename, std::ios::binary);
  if (!os) throw std::runtime_error("batch summary: cannot open " + filename);
  os.write(kMagic.data(), kMagic.size());
  put(os, BatchSummary::kVersion);
  put(os, summary.seed);
  put(os, summary.n_paths);
  put(os, summary.model_hash);
  put(os, summary.scheme);
  put(os, summary.t0);
  put(os, summary.s);
  put(os, summary.steps_per_year);
  put(os, summary.min_forward_steps);
  put_vec(os, summary.maturities);
  put_vec(os, summary.times);
  put_vec(os, summary.mean_x);
  put_vec(os, summary.var_x);
  put_vec(os, summary.mean_y);
  put_vec(os, summary.var_y);
  if (!os) throw std::runtime_error("batch summary: write failed for " + filename);
}

BatchSummary read_batch_summary(const std::string& filename) {
  std::ifstream is(filename, std::ios::binary);
  if (!is) throw std::runtime_error("batch summary: cannot open " + filename);
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw std::runtime_error("batch summary: bad magic");
  const auto version = get<std::uint32_t>(is);
  if (version != BatchSummary::kVersion) {
    throw std::runtime_error("batch summary: unsupported version " + std::to_string(version));
  }
  BatchSummary s;
  s.seed = get<std::uint64_t>(is);
  s.n_paths = get<std::uint64_t>(is);
  s.model_hash = get<std::uint64_t>(is);
  s.scheme = get<std::uint32_t>(is);
  s.t0 = get<double>(is);
  s.s = get<double>(is);
  s.steps_per_year = get<double>(is);
  s.min_forward_steps = get<std::int32_t>(is);
  s.maturities = get_vec(is);
  s.times = get_vec(is);
  s.mean_x = get_vec(is);
  s.var_x = get_vec(is);
  s.mean_y = get_vec(is);
  s.var_y = get_vec(is);
  return s;
}

}  // namespace fwdsmile::mc
