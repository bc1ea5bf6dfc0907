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

#include "dpstream/low_freq.h"

#include <cmath>

#include <gtest/gtest.h>

#include "dpstream/distinct.h"
#include "dpstream/errors.h"
#include "dpstream/sensitivity.h"
#include "dpstream/stream.h"

namespace dpstream {
namespace {

StreamEvent E(uint64_t id) { return StreamEvent::Element(id); }

LowFreqSmallParams SmallParams(uint64_t n, int k, int64_t T) {
  LowFreqSmallParams p;
  p.universe = n;
  p.k = k;
  p.counter = {T, 1.0 / (kCounterStreamSensitivity * k), 0.05 / k};
  return p;
}

TEST(ExactLowFrequencyTest, CountsByFrequency) {
  FrequencyTable f;
  f.Add(1, 1);
  f.Add(2, 2);
  f.Add(3, 2);
  f.Add(4, 5);
  EXPECT_EQ(ExactLowFrequencyCounts(f, 3), (std::vector<int64_t>{1, 2, 0}));
}

TEST(LowFreqSmallTest, NoiseOffTracksExactCounts) {
  const int64_t T = 2000;
  const int k = 6;
  LowFreqSmall est(SmallParams(50, k, T), NoiseContext(3, true));
  const Stream s = GenerateStream(GeneratorSpec::Parse("zipf:1.1,empty=0.2"),
                                  {T, 50, StreamMode::kElements}, 11);
  for (int64_t t = 0; t < T; ++t) {
    const std::vector<double> out = est.Feed(s[t]);
    const std::vector<int64_t> exact = ExactLowFrequencyCounts(
        ExactFrequencies(StreamView(s).first(static_cast<size_t>(t + 1))), k);
    for (int j = 1; j <= k; ++j) {
      ASSERT_EQ(out[j - 1], double(exact[j - 1])) << "t=" << t << " j=" << j;
      ASSERT_EQ(est.exact(j), exact[j - 1]);
    }
  }
}

TEST(LowFreqSmallTest, FrequencyAboveKLeavesCounters) {
  LowFreqSmall est(SmallParams(4, 2, 10), NoiseContext(1, true));
  est.Observe(E(1));
  EXPECT_EQ(est.Estimate(1), 1.0);
  est.Observe(E(1));
  EXPECT_EQ(est.Estimate(1), 0.0);
  EXPECT_EQ(est.Estimate(2), 1.0);
  est.Observe(E(1));
  EXPECT_EQ(est.Estimate(2), 0.0);
  EXPECT_EQ(est.frequency(1), 3);
}

TEST(LowFreqSmallTest, RejectsBadInput) {
  LowFreqSmall est(SmallParams(4, 2, 10), NoiseContext(1));
  EXPECT_THROW(est.Observe(E(4)), DomainError);
  EXPECT_THROW(est.Observe(StreamEvent::Integer(1)), ModeError);
  EXPECT_THROW(LowFreqSmall(SmallParams(4, 0, 10), NoiseContext(1)),
               ConfigError);
}

TEST(LowFreqSmallTest, NoisyCountsWithinTreeBound) {
  const int64_t T = 1024;
  const int k = 3;
  const Stream s = GenerateStream(GeneratorSpec::Parse("uniform"),
                                  {T, 300, StreamMode::kElements}, 5);
  const std::vector<int64_t> exact =
      ExactLowFrequencyCounts(ExactFrequencies(s), k);
  int good = 0;
  for (int r = 0; r < 40; ++r) {
    LowFreqSmall est(SmallParams(300, k, T), NoiseContext(200 + r));
    for (const StreamEvent& e : s) est.Observe(e);
    const double bound = est.guarantee().gamma;
    bool ok = true;
    for (int j = 1; j <= k; ++j) {
      ok = ok && std::abs(est.Estimate(j) - double(exact[j - 1])) <= bound;
    }
    good += ok;
  }
  EXPECT_GE(good, 38);
}

TEST(FrequencyCounterMappingTest, SensitivityAtMostEightK) {
  for (int k : {1, 2}) {
    const SensitivityReport rep = MappingSensitivity(
        [k](StreamView s) { return FrequencyCounterMapping(s, k); }, 2, 5);
    EXPECT_LE(rep.max_distance, kCounterStreamSensitivity * k) << k;
  }
}

TEST(LowFreqPlanTest, SmallRegime) {
  LowFreqConfig c;
  c.k = 4;
  c.n = 100;
  c.T = 100;
  const LowFreqPlan plan = PlanLowFreq(c);
  EXPECT_TRUE(plan.small);
  EXPECT_DOUBLE_EQ(plan.small_params.counter.epsilon, 1.0 / 32.0);
  EXPECT_TRUE(plan.budget.EpsilonExhausted());
}

TEST(LowFreqPlanTest, GeneralRegimeCopies) {
  LowFreqConfig c;
  c.k = 2;
  c.xi = 0.1;
  c.T = 1024;
  c.n = uint64_t{1} << 20;
  c.caps.max_copies = 4;
  const LowFreqPlan plan = PlanLowFreq(c);
  EXPECT_FALSE(plan.small);
  // ceil(50 ln(3 * 1024 / 0.1)) = ceil(516.6).
  EXPECT_EQ(plan.theory_copies, 517);
  EXPECT_EQ(plan.copies, 4);
  EXPECT_DOUBLE_EQ(plan.sub_epsilon, 1.0 / 12.0);
  EXPECT_TRUE(plan.budget.EpsilonExhausted());
  EXPECT_LE(plan.budget.spent_xi(), c.xi * (1 + 1e-12));
  EXPECT_EQ(plan.general_params.levels, 10);
  EXPECT_DOUBLE_EQ(plan.general_params.LevelTarget(),
                   64.0 * plan.general_params.lambda / (0.1 * 0.1));
}

// An exact distinct count stands in for the private one.
class ExactDistinct final : public ContinualEstimator {
 public:
  void Observe(const StreamEvent& e) override {
    ++t_;
    seen_ += ind_.Step(e);
  }
  double Estimate() const override { return double(seen_); }
  int64_t time() const override { return t_; }

 private:
  FirstArrivalIndicator ind_;
  int64_t seen_ = 0;
  int64_t t_ = 0;
};

TEST(LowFreqGeneralTest, ZeroRuleBelowThreshold) {
  const TreeParams counter{256, 1.0, 0.05};
  const LowFreqGeneralParams p = LowFreqGeneralParams::Plan(
      uint64_t{1} << 20, 256, 0.2, 2, counter, Guarantee{1.0, 10.0});
  LowFreqGeneral est(p, std::make_unique<ExactDistinct>(),
                     NoiseContext(1, true));
  for (uint64_t a = 0; a < 200; ++a) {
    const std::vector<double> out = est.Feed(E(a));
    ASSERT_EQ(out, (std::vector<double>{0.0, 0.0}));
  }
  EXPECT_FALSE(est.SelectedLevel().has_value());
}

TEST(LowFreqGeneralTest, SelectedLevelScalesNoiseOffCounts) {
  // Shrink the level target by raising eta so that selection fires.
  const int64_t T = 4096;
  const TreeParams counter{T, 1.0, 0.05};
  LowFreqGeneralParams p = LowFreqGeneralParams::Plan(
      uint64_t{1} << 20, T, 0.45, 2, counter, Guarantee{1.0, 0.0});
  p.lambda = 4;
  ASSERT_LT(p.LevelTarget() * 2, 4096.0);
  LowFreqGeneral est(p, std::make_unique<ExactDistinct>(),
                     NoiseContext(6, true));
  const Stream s = GenerateStream(GeneratorSpec::Parse("all_distinct"),
                                  {T, uint64_t{1} << 20, StreamMode::kElements},
                                  2);
  for (const StreamEvent& e : s) est.Observe(e);
  const std::optional<int> lvl = est.SelectedLevel();
  ASSERT_TRUE(lvl.has_value());
  const std::vector<double> out = est.Estimates();
  EXPECT_EQ(out[0], std::ldexp(est.level(*lvl).Estimate(1), *lvl));
  EXPECT_EQ(out[1], 0.0);
  EXPECT_EQ(est.level(*lvl).exact(2), 0);
}

TEST(LowFreqMedianTest, PerIndexMedianAndClamp) {
  std::vector<std::unique_ptr<FrequencyCountEstimator>> copies;
  for (int i = 0; i < 3; ++i) {
    copies.push_back(std::make_unique<LowFreqSmall>(SmallParams(8, 2, 20),
                                                    NoiseContext(40 + i)));
  }
  LowFreqMedian med(std::move(copies), /*clamp=*/true);
  const std::vector<double> out = med.Feed(E(1));
  EXPECT_EQ(med.copies(), 3u);
  ASSERT_EQ(out.size(), 2u);
  for (double v : out) EXPECT_GE(v, 0.0);
  std::vector<double> c0;
  for (size_t i = 0; i < 3; ++i) c0.push_back(med.copy(i).Estimates()[0]);
  EXPECT_EQ(out[0], std::max(0.0, MedianBoost(c0)));
}

}  // namespace
}  // namespace dpstream
