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

#include "dpstream/moment.h"

#include <cmath>

#include <gtest/gtest.h>

#include "dpstream/errors.h"
#include "dpstream/sensitivity.h"
#include "dpstream/stream.h"

namespace dpstream {
namespace {

MomentConfig SmallConfig(double p, int64_t T, uint64_t n) {
  MomentConfig c;
  c.p = p;
  c.eta = 0.25;
  c.n = n;
  c.T = T;
  c.max_heavy_k = 4;
  c.caps.max_copies = 1;
  return c;
}

TEST(IntervalBaseTest, NoiseOffAndRange) {
  NoiseContext off(1, true);
  EXPECT_EQ(SampleIntervalBase(off, 0.25, 100, 3), 0.75);
  NoiseContext on(2);
  for (int i = 0; i < 1000; ++i) {
    const double b = SampleIntervalBase(on, 0.25, 100, 3);
    ASSERT_GE(b, 0.5);
    ASSERT_LE(b, 1.0);
  }
  EXPECT_THROW(SampleIntervalBase(on, 0.25, 100, 1), ConfigError);
}

TEST(IntervalBaseTest, SnapsToGrid) {
  // Spacing (0.5 / 2)^2 = 1/16.
  NoiseContext ctx(5);
  for (int i = 0; i < 100; ++i) {
    const double b = SampleIntervalBase(ctx, 0.5, 2, 2);
    const double steps = (b - 0.5) * 16.0;
    ASSERT_NEAR(steps, std::round(steps), 1e-9);
  }
}

TEST(IntervalGeometryTest, FrozenBoundaries) {
  const IntervalGeometry g = IntervalGeometry::Build(0.75, 0.25, 10.0, 100);
  // 0.75 * 1.25^12 = 10.91 is the first boundary above 10; 0.75 * 1.25^22
  // = 101.6 is the first reaching 100.
  EXPECT_EQ(g.first, 12);
  EXPECT_EQ(g.last, 21);
  EXPECT_EQ(g.cutoff, 10);
  EXPECT_EQ(g.count(), 10);
  EXPECT_EQ(g.Locate(10.0), IntervalIndex::Below());
  EXPECT_EQ(g.Locate(11.0), IntervalIndex::Inside(12));
  EXPECT_EQ(g.Locate(g.Boundary(13)), IntervalIndex::Inside(12));
  EXPECT_EQ(g.Locate(100.0), IntervalIndex::Inside(21));
  EXPECT_EQ(g.Locate(1000.0), IntervalIndex::Above());
}

TEST(IntervalGeometryTest, ThresholdAboveHorizonLeavesNoIntervals) {
  const IntervalGeometry g = IntervalGeometry::Build(0.75, 0.25, 500.0, 100);
  EXPECT_EQ(g.count(), 0);
  EXPECT_EQ(g.cutoff, 100);
  const IntervalGeometry low = IntervalGeometry::Build(0.75, 0.25, 0.1, 100);
  EXPECT_GE(low.cutoff, 1);
  EXPECT_GT(low.Boundary(low.first), 1.0);
}

TEST(ContributingIntervalsTest, LowMassAlwaysCounts) {
  const IntervalGeometry g = IntervalGeometry::Build(0.75, 0.25, 10.0, 1000);
  FrequencyTable f;
  f.Add(1, 3);
  f.Add(2, 990);
  f.Add(3, 11);
  const ContributingSet set = ContributingIntervals(f, g, 1.0);
  EXPECT_DOUBLE_EQ(set.total_mass, 1004.0);
  ASSERT_EQ(set.intervals.size(), 1u);
  EXPECT_EQ(g.Locate(990.0), IntervalIndex::Inside(set.intervals[0]));
  EXPECT_DOUBLE_EQ(set.contributing_mass, 993.0);
}

TEST(MomentLevelMappingTest, Sensitivity) {
  for (uint64_t seed = 0; seed < 8; ++seed) {
    NoiseContext ctx(seed);
    const GeometricLevelHash h(2, 4, ctx);
    auto mapping = [&](StreamView s) { return MomentLevelMapping(h, s); };
    EXPECT_LE(MappingSensitivity(mapping, 3, 4).max_distance, 3) << seed;
    EXPECT_LE(MappingSensitivity(mapping, 3, 4,
                                 NeighborRelation::kEmptyReplacement)
                  .max_distance,
              2)
        << seed;
  }
}

TEST(MomentPlanTest, CopiesAndBudget) {
  MomentConfig c = SmallConfig(2.0, 1024, 256);
  c.caps = {};
  c.xi = 0.05;
  const MomentPlan plan = PlanMoment(c);
  EXPECT_EQ(plan.theory_copies,
            static_cast<int64_t>(std::ceil(50.0 * std::log(3.0 * 1024 / 0.05))));
  EXPECT_EQ(plan.levels, 8);
  EXPECT_EQ(plan.heavy_k, 4);
  EXPECT_GT(plan.theory_heavy_k, 4.0);
  EXPECT_TRUE(plan.budget.EpsilonExhausted());
  EXPECT_LE(plan.budget.spent_xi(), c.xi * (1 + 1e-12));
}

TEST(MomentPlanTest, UncappedHeavyKIsResourceError) {
  MomentConfig c = SmallConfig(2.0, 1024, 256);
  c.max_heavy_k = 0;
  EXPECT_THROW(PlanMoment(c), ResourceError);
}

TEST(MomentPlanTest, RejectsBadConfig) {
  MomentConfig c = SmallConfig(-1.0, 16, 16);
  EXPECT_THROW(PlanMoment(c), ConfigError);
  c = SmallConfig(1.0, 16, 16);
  c.tau = -1.0;
  EXPECT_THROW(PlanMoment(c), ConfigError);
}

class MomentNoiseOffTest : public ::testing::TestWithParam<double> {};

TEST_P(MomentNoiseOffTest, LowFrequencyPathIsExact) {
  // With the interval threshold at T every frequency is at most the cutoff,
  // so the estimate is the noise-off low-frequency sum: exactly F_p.
  const double p = GetParam();
  const int64_t T = 512;
  MomentConfig c = SmallConfig(p, T, 64);
  c.exact_backends = true;
  c.tau = double(T);
  const MomentPlan plan = PlanMoment(c);
  const Stream s = GenerateStream(GeneratorSpec::Parse("zipf:1.2,empty=0.1"),
                                  {T, 64, StreamMode::kElements}, 9);
  MomentCopy copy(plan, NoiseContext(3, true));
  EXPECT_EQ(copy.geometry().count(), 0);
  for (int64_t t = 0; t < T; ++t) {
    copy.Observe(s[t]);
    if ((t + 1) % 64 != 0) continue;
    const FrequencyTable f =
        ExactFrequencies(StreamView(s).first(static_cast<size_t>(t + 1)));
    ASSERT_NEAR(copy.Estimate(), ExactLpMoment(f, p),
                1e-9 * ExactLpMoment(f, p))
        << "t=" << t + 1;
    ASSERT_EQ(copy.HighPart(), 0.0);
  }
}

INSTANTIATE_TEST_SUITE_P(Exponents, MomentNoiseOffTest,
                         ::testing::Values(0.0, 1.0, 2.0, 3.0));

TEST(MomentCopyTest, HeavyPartUsesReportedIntervals) {
  // Exact backends and a low threshold: the planted element is reported at
  // level 0 and lands in the interval holding its frequency.
  const int64_t T = 1024;
  MomentConfig c = SmallConfig(1.0, T, 64);
  c.exact_backends = true;
  c.tau = 8.0;
  const MomentPlan plan = PlanMoment(c);
  const Stream s = GenerateStream(GeneratorSpec::Parse("planted_heavy:0.7"),
                                  {T, 64, StreamMode::kElements}, 2);
  MomentCopy copy(plan, NoiseContext(1, true));
  for (const StreamEvent& e : s) copy.Observe(e);
  const double f0 = double(ExactFrequencies(s).Count(0));
  const IntervalIndex idx = copy.geometry().Locate(f0);
  ASSERT_EQ(idx.kind, IntervalIndex::Kind::kInside);
  const std::vector<double> z = copy.IntervalCounts();
  EXPECT_GE(z[static_cast<size_t>(idx.q - copy.geometry().first)], 1.0);
  EXPECT_GT(copy.HighPart(), 0.0);
}

TEST(MomentCopyTest, RejectsIntegers) {
  MomentCopy copy(PlanMoment(SmallConfig(1.0, 8, 8)), NoiseContext(1));
  EXPECT_THROW(copy.Observe(StreamEvent::Integer(1)), ModeError);
}

TEST(MomentEstimatorTest, NoisyRunIsDeterministicInSeed) {
  const MomentPlan plan = PlanMoment(SmallConfig(2.0, 128, 16));
  const Stream s = GenerateStream(GeneratorSpec::Parse("uniform"),
                                  {128, 16, StreamMode::kElements}, 4);
  auto a = MakeMomentEstimator(plan, NoiseContext(7));
  auto b = MakeMomentEstimator(plan, NoiseContext(7));
  for (const StreamEvent& e : s) {
    a->Observe(e);
    b->Observe(e);
  }
  EXPECT_EQ(a->Estimate(), b->Estimate());
  EXPECT_TRUE(std::isfinite(a->Estimate()));
}

}  // namespace
}  // namespace dpstream
