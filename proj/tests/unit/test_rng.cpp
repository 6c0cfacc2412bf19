#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "fwdsmile/parallel.hpp"
#include "fwdsmile/rng.hpp"

namespace rng = fwdsmile::rng;

// Known-answer vectors of Philox4x32-10 from the Random123 distribution.
TEST(Philox, KnownAnswers) {
  using C = rng::Philox4x32::Counter;
  EXPECT_EQ(rng::Philox4x32::block({0, 0, 0, 0}, {0, 0}), (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(rng::Philox4x32::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(rng::Philox4x32::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(NormalStream, ReproducibleAndStreamSeparated) {
  rng::NormalStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  for (int i = 0; i < 100; ++i) {
    const double x = a.next();
    EXPECT_EQ(x, b.next());
    EXPECT_NE(x, c.next());
    EXPECT_NE(x, d.next());
  }
}

TEST(NormalStream, Moments) {
  rng::NormalStream g(1, 0);
  const int n = 400000;
  double s1 = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = g.next();
    s1 += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  EXPECT_NEAR(s1 / n, 0.0, 3.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 3.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s4 / n, 3.0, 3.0 * std::sqrt(96.0 / n));
}

TEST(StreamId, FirstIdVerbatimAndDistinct) {
  EXPECT_EQ(rng::stream_id({5}), 5u);
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 50; ++a) {
    for (std::uint64_t b = 0; b < 50; ++b) seen.insert(rng::stream_id({a, b}));
  }
  EXPECT_EQ(seen.size(), 2500u);
}

TEST(Parallel, ChunksCoverRangeAndRethrow) {
  std::vector<int> hits(1000, 0);
  fwdsmile::parallel_chunks(hits.size(), 4, [&](std::size_t b, std::size_t e, unsigned) {
    for (std::size_t i = b; i < e; ++i) ++hits[i];
  });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(fwdsmile::parallel_chunks(10, 3,
                                         [](std::size_t b, std::size_t, unsigned) {
                                           if (b > 0) throw std::runtime_error("boom");
                                         }),
               std::runtime_error);
  EXPECT_EQ(fwdsmile::resolve_threads(3), 3u);
}
