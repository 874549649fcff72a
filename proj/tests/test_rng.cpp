#include <cmath>
#include <cstdint>
#include <set>

#include <gtest/gtest.h>

#include "gmmssl/rng.hpp"

using namespace gmmssl;

// Known-answer vectors published with the Random123 reference implementation.
TEST(Philox4x32, KnownAnswerVectors) {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  EXPECT_EQ(Philox4x32::block(C{0, 0, 0, 0}, K{0, 0}),
            (C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(Philox4x32::block(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                              K{0xffffffffu, 0xffffffffu}),
            (C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(Philox4x32::block(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                              K{0xa4093822u, 0x299f31d0u}),
            (C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(RandomStream, ReproducibleAndStreamSeparated) {
  RandomStream a(42, stream_id(3, 1)), b(42, stream_id(3, 1)), c(42, stream_id(3, 2)),
      e(43, stream_id(3, 1));
  int same_c = 0, same_e = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto va = a.next_u64();
    EXPECT_EQ(va, b.next_u64());
    same_c += (va == c.next_u64());
    same_e += (va == e.next_u64());
  }
  EXPECT_EQ(same_c, 0);
  EXPECT_EQ(same_e, 0);
}

TEST(RandomStream, UniformRangeAndMoments) {
  RandomStream r(7, 0);
  const int n = 1'000'000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double v = r.uniform_open();
    ASSERT_GT(v, 0.0);
    ASSERT_LT(v, 1.0);
    s += u;
    s2 += u * u;
  }
  EXPECT_NEAR(s / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(s2 / n, 1.0 / 3.0, 4 * std::sqrt(4.0 / 45 / n));
}

TEST(RandomStream, NormalMoments) {
  RandomStream r(9, 1);
  const int n = 1'000'000;
  double s = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 4 / std::sqrt(double(n)));
  EXPECT_NEAR(s2 / n, 1.0, 4 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s4 / n, 3.0, 4 * std::sqrt(96.0 / n));
}

TEST(RandomStream, SignIsFair) {
  RandomStream r(5, 5);
  const int n = 1'000'000;
  int plus = 0;
  for (int i = 0; i < n; ++i) {
    const int s = r.sign();
    ASSERT_TRUE(s == 1 || s == -1);
    plus += (s == 1);
  }
  EXPECT_NEAR(double(plus) / n, 0.5, 4 * 0.5 / std::sqrt(double(n)));
}
