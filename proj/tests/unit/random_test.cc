//
// Copyright 2026 The dpstream Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "dpstream/random.h"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "dpstream/errors.h"

namespace dpstream {
namespace {

TEST(NoiseContextTest, NoiseOffZeroesLaplaceButAdvances) {
  NoiseContext ctx(42, /*noise_off=*/true);
  EXPECT_EQ(ctx.Laplace(1.0), 0.0);
  EXPECT_EQ(ctx.Laplace(100.0), 0.0);
  EXPECT_EQ(ctx.draw_counter(), 2u);
  EXPECT_EQ(ctx.KeyedLaplace(7, 3.0), 0.0);
}

TEST(NoiseContextTest, ReplayIsDeterministic) {
  NoiseContext a(9), b(9);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.Laplace(2.0), b.Laplace(2.0));
  NoiseContext c(10);
  NoiseContext d(9);
  EXPECT_NE(c.Laplace(1.0), d.Laplace(1.0));
}

TEST(NoiseContextTest, DerivedContextsDiffer) {
  const NoiseContext root(1);
  NoiseContext x = root.Derive(1);
  NoiseContext y = root.Derive(2);
  EXPECT_NE(x.NextU64(), y.NextU64());
  EXPECT_EQ(root.Derive(3).master_seed(), root.Derive(3).master_seed());
}

TEST(NoiseContextTest, UniformOpenInterval) {
  NoiseContext ctx(3);
  for (int i = 0; i < 100000; ++i) {
    const double u = ctx.NextUniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(NoiseContextTest, RejectsBadScale) {
  NoiseContext ctx(1);
  EXPECT_THROW(ctx.Laplace(0.0), DomainError);
  EXPECT_THROW(ctx.Laplace(-1.0), DomainError);
  EXPECT_THROW(ctx.Laplace(INFINITY), DomainError);
}

TEST(LaplaceTest, MeanNearZero) {
  NoiseContext ctx(2024);
  double sum = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) sum += ctx.Laplace(1.0);
  EXPECT_NEAR(sum / n, 0.0, 0.01);
}

TEST(LaplaceTest, VarianceIsTwoBSquared) {
  NoiseContext ctx(77);
  const int n = 1000000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = ctx.Laplace(2.0);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  EXPECT_NEAR(var, 8.0, 0.4);
}

TEST(LaplaceTest, KeyedDrawsAreStateless) {
  const NoiseContext ctx(5);
  EXPECT_EQ(ctx.KeyedLaplace(11, 1.0), ctx.KeyedLaplace(11, 1.0));
  EXPECT_NE(ctx.KeyedLaplace(11, 1.0), ctx.KeyedLaplace(12, 1.0));
  EXPECT_EQ(ctx.draw_counter(), 0u);
}

TEST(PolyHashTest, RangeAndDeterminism) {
  NoiseContext ctx(8);
  const PolyHash h(4, 37, ctx);
  EXPECT_EQ(h.independence(), 4);
  for (uint64_t x = 0; x < 1000; ++x) {
    ASSERT_LT(h(x), 37u);
    ASSERT_EQ(h(x), h(x));
  }
  const PolyHash fixed({5, 1}, 1000);
  EXPECT_EQ(fixed(10), 15u);
  EXPECT_EQ(fixed.FieldValue(kMersenne61 - 5), 0u);
}

TEST(PolyHashTest, PairwiseCollisionRate) {
  // For a 2-wise family into m buckets, Pr[h(x) = h(y)] is about 1/m.
  int collisions = 0;
  const int trials = 20000;
  for (int s = 0; s < trials; ++s) {
    NoiseContext ctx(static_cast<uint64_t>(s));
    const PolyHash h(2, 16, ctx);
    collisions += h(1) == h(2);
  }
  EXPECT_NEAR(double(collisions) / trials, 1.0 / 16.0, 0.01);
}

TEST(GeometricLevelTest, SameSeedSameLevel) {
  NoiseContext a(4), b(4);
  const GeometricLevelHash ha(8, 4, a), hb(8, 4, b);
  for (uint64_t x = 0; x < 1000; ++x) ASSERT_EQ(ha.Level(x), hb.Level(x));
}

TEST(GeometricLevelTest, LevelFrequencies) {
  NoiseContext ctx(6);
  const GeometricLevelHash h(8, 4, ctx);
  const int n = 100000;
  int level1 = 0, none = 0;
  for (uint64_t x = 0; x < static_cast<uint64_t>(n); ++x) {
    const auto l = h.Level(x);
    if (!l) {
      ++none;
    } else {
      ASSERT_GE(*l, 1);
      ASSERT_LE(*l, 8);
      level1 += *l == 1;
    }
  }
  EXPECT_NEAR(double(level1) / n, 0.5, 0.015);
  EXPECT_NEAR(double(none) / n, 1.0 / 256.0, 0.002);
}

TEST(SignHashTest, BalancedSigns) {
  NoiseContext ctx(12);
  const SignHash g(ctx);
  int plus = 0;
  for (uint64_t x = 0; x < 100000; ++x) {
    const int s = g(x);
    ASSERT_TRUE(s == 1 || s == -1);
    plus += s == 1;
  }
  EXPECT_NEAR(plus / 100000.0, 0.5, 0.01);
}

TEST(MedianBoostTest, LowerMedian) {
  const std::vector<double> odd = {3, 1, 2};
  const std::vector<double> even = {1, 2, 3, 4};
  EXPECT_EQ(MedianBoost(odd), 2.0);
  EXPECT_EQ(MedianBoost(even), 2.0);
  EXPECT_THROW(MedianBoost(std::vector<double>{}), DomainError);
}

TEST(MedianBoostTest, ChernoffBoundMonteCarlo) {
  // 51 estimates, each good with probability 2/3; the median is good in at
  // least 1 - exp(-51/48) of trials.
  NoiseContext ctx(99);
  const int trials = 20000;
  int good = 0;
  std::vector<double> v(51);
  for (int t = 0; t < trials; ++t) {
    for (double& x : v) x = ctx.NextUniform() < 2.0 / 3.0 ? 0.0 : 100.0;
    good += MedianBoost(v) == 0.0;
  }
  EXPECT_GE(double(good) / trials, 1.0 - std::exp(-51.0 / 48.0));
}

TEST(BoostCountTest, FrozenValues) {
  EXPECT_EQ(BoostCount(1.0 / std::exp(1.0)), 50);
  EXPECT_EQ(BoostCount(0.05), 150);
  EXPECT_EQ(BoostCount(0.49), 36);
  EXPECT_THROW(BoostCount(0.5), DomainError);
  EXPECT_THROW(BoostCount(0.0), DomainError);
}

TEST(IntegerHelpersTest, RoundingAndLogs) {
  EXPECT_EQ(RoundUpEvenAtLeast4(1.0), 4);
  EXPECT_EQ(RoundUpEvenAtLeast4(4.0), 4);
  EXPECT_EQ(RoundUpEvenAtLeast4(4.1), 6);
  EXPECT_EQ(RoundUpEvenAtLeast4(7.0), 8);
  EXPECT_EQ(CeilLog2(1), 0);
  EXPECT_EQ(CeilLog2(2), 1);
  EXPECT_EQ(CeilLog2(5), 3);
  EXPECT_EQ(CeilLog2(uint64_t{1} << 40), 40);
  EXPECT_EQ(FiftyLogCopies(1.0), 50);
}

}  // namespace
}  // namespace dpstream
