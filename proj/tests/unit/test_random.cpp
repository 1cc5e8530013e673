#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <set>
#include <vector>

#include "rsvi/random.hpp"
#include "rsvi/stats.hpp"

using namespace rsvi;

// Published Philox4x32-10 known-answer vectors.
TEST(Philox, KnownAnswerZero) {
  const auto out = philox4x32({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
}

TEST(Philox, KnownAnswerAllOnes) {
  const auto out = philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                              {0xffffffff, 0xffffffff});
  EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
}

TEST(Philox, KnownAnswerPiDigits) {
  const auto out = philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                              {0xa4093822, 0x299f31d0});
  EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(RandomStream, UniformMean) {
  RandomStream s(20240601, 3);
  const int n = 1'000'000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.002);
}

TEST(RandomStream, NormalVariance) {
  RandomStream s(77, 0);
  std::vector<double> xs(1'000'000);
  for (auto& x : xs) x = s.std_normal();
  const auto m = sample_moments(xs);
  EXPECT_NEAR(m.variance, 1.0, 0.005);
  EXPECT_NEAR(m.mean, 0.0, 0.003);
}

TEST(RandomStream, SameSeedAndIdReplay) {
  RandomStream a(123, 9), b(123, 9);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(a.next_u64(), b.next_u64());
    ASSERT_EQ(a.std_normal(), b.std_normal());
  }
}

TEST(RandomStream, DistinctIdsAndSeedsDiffer) {
  RandomStream a(1, 0), b(1, 1), c(2, 0);
  const auto x = a.next_u64();
  EXPECT_NE(x, b.next_u64());
  EXPECT_NE(x, c.next_u64());
}

TEST(RandomStream, CopyReplaysFromCurrentPosition) {
  RandomStream a(5, 5);
  a.next_u64();
  a.std_normal();
  RandomStream b = a;
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.std_normal(), b.std_normal());
}

TEST(RandomStream, DeriveIsPureAndDistinct) {
  RandomStream parent(42, 0);
  RandomStream before = parent;
  std::set<std::uint64_t> ids;
  for (std::uint64_t k = 0; k < 1000; ++k) ids.insert(parent.derive(k).stream_id());
  EXPECT_EQ(ids.size(), 1000u);
  EXPECT_EQ(parent.next_u64(), before.next_u64());
  EXPECT_EQ(parent.derive(7).next_u64(), RandomStream(42, 0).derive(7).next_u64());
  EXPECT_EQ(parent.derive(7).seed(), 42u);
}

TEST(RandomStream, UniformOpenNeverZero) {
  RandomStream s(9, 9);
  for (int i = 0; i < 100000; ++i) {
    const double u = s.uniform_open();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(RandomStream, NormalPassesKs) {
  RandomStream s(31337, 2);
  std::vector<double> xs(100000);
  for (auto& x : xs) x = s.std_normal();
  const double d = ks_statistic(xs, [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); });
  EXPECT_GT(ks_p_value(d, xs.size()), 0.01);
}

TEST(Mix64, IsInjectiveOnSample) {
  std::set<std::uint64_t> out;
  for (std::uint64_t i = 0; i < 10000; ++i) out.insert(mix64(i));
  EXPECT_EQ(out.size(), 10000u);
}
