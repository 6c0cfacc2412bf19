#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace fwdsmile::rng {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Folds a list of indices into one stream id; the first index is kept verbatim
/// so top-level path streams stay addressable by path number.
inline std::uint64_t stream_id(std::initializer_list<std::uint64_t> ids) {
  std::uint64_t out = 0;
  bool first = true;
  for (std::uint64_t id : ids) {
    out = first ? id : splitmix64(out ^ splitmix64(id + 0x632BE59BD9B4E019ULL));
    first = false;
  }
  return out;
}

/// Standard normals from a (seed, stream) keyed Philox counter sequence.
/// Draw n of any stream depends only on (seed, stream, n).
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_lo_(static_cast<std::uint32_t>(stream)),
        stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

  double next() {
    if (cached_) {
      cached_ = false;
      return spare_;
    }
    const auto out = Philox4x32::block(
        {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32), stream_lo_,
         stream_hi_},
        key_);
    ++block_;
    // Uniforms in (0, 1) with 53-bit resolution.
    const double u1 = to_open_unit((std::uint64_t{out[0]} << 32) | out[1]);
    const double u2 = to_open_unit((std::uint64_t{out[2]} << 32) | out[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586477 * u2;
    spare_ = radius * std::sin(angle);
    cached_ = true;
    return radius * std::cos(angle);
  }

 private:
  static double to_open_unit(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  Philox4x32::Key key_;
  std::uint32_t stream_lo_;
  std::uint32_t stream_hi_;
  std::uint64_t block_ = 0;
  double spare_ = 0.0;
  bool cached_ = false;
};

}  // namespace fwdsmile::rng
