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

// Randomized properties over many seeded inputs.

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "dpstream/budget.h"
#include "dpstream/distinct.h"
#include "dpstream/random.h"
#include "dpstream/smooth_histogram.h"
#include "dpstream/stream.h"
#include "dpstream/summing.h"

namespace dpstream {
namespace {

Stream RandomElements(std::mt19937_64& rng, int64_t T, uint64_t n) {
  std::uniform_int_distribution<uint64_t> pick(0, n);
  Stream s;
  for (int64_t t = 0; t < T; ++t) {
    const uint64_t v = pick(rng);
    s.push_back(v == n ? StreamEvent::Empty() : StreamEvent::Element(v));
  }
  return s;
}

TEST(PropertyTest, NoiseOffTreeEqualsPrefixSums) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int64_t T = std::uniform_int_distribution<int64_t>(1, 300)(rng);
    std::uniform_int_distribution<int64_t> val(-20, 20);
    BinaryTreeMechanism m({T, 1.0, 0.05}, NoiseContext(rng(), true));
    int64_t sum = 0;
    for (int64_t t = 0; t < T; ++t) {
      const int64_t x = val(rng);
      sum += x;
      ASSERT_EQ(m.Feed(x), double(sum));
    }
  }
}

TEST(PropertyTest, NoiseOffGroupingLagsByLessThanThreshold) {
  std::mt19937_64 rng(2);
  // Released totals never exceed the exact sum and trail it by less than the
  // threshold.
  for (int trial = 0; trial < 100; ++trial) {
    const GroupingParams params{256, 1.0, 0.2, 0.1, std::nullopt};
    const double threshold = GroupingMechanism::BaseThreshold(params);
    GroupingMechanism m(params, NoiseContext(rng(), true));
    std::uniform_int_distribution<int64_t> val(0, 40);
    int64_t sum = 0;
    for (int64_t t = 0; t < 256; ++t) {
      const int64_t x = val(rng);
      sum += x;
      const double out = m.Feed(x);
      ASSERT_LE(out, double(sum));
      ASSERT_LT(double(sum) - out, threshold);
    }
  }
}

TEST(PropertyTest, SmallUniverseDistinctNoiseOffExact) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const uint64_t n = std::uniform_int_distribution<uint64_t>(1, 40)(rng);
    const Stream s = RandomElements(rng, 200, n);
    SmallDistinctParams p;
    p.universe = n;
    p.summing = {SummingBackend::kTree, 200, 0.2, 0.1, 0.05};
    SmallUniverseDistinct d(p, NoiseContext(rng(), true));
    const std::vector<int64_t> exact = ExactDistinctCounts(s);
    for (size_t t = 0; t < s.size(); ++t) {
      ASSERT_EQ(d.Feed(s[t]), double(exact[t]));
    }
  }
}

TEST(PropertyTest, ShiftedValuesSatisfyRelativeEnvelope) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 100000; ++i) {
    const double alpha = 1.0 + 3.0 * unit(rng) + 1e-6;
    const double gamma = 1000.0 * unit(rng);
    const double g = 1e4 * unit(rng);
    const double lo = g / alpha - gamma, hi = alpha * g + gamma;
    const double gp = lo + (hi - lo) * unit(rng);
    const ShiftedEstimate s = ShiftToRelative(gp, alpha, gamma);
    const double target = g + s.shift;
    ASSERT_GE(s.value(), target / alpha * (1 - 1e-12));
    ASSERT_LE(s.value(), target * alpha * (1 + 1e-12));
  }
}

TEST(PropertyTest, MedianBoostBetweenMinAndMaxAndOrderFree) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> v(std::uniform_int_distribution<int>(1, 31)(rng));
    for (double& x : v) x = gauss(rng);
    const double m = MedianBoost(v);
    ASSERT_GE(m, *std::min_element(v.begin(), v.end()));
    ASSERT_LE(m, *std::max_element(v.begin(), v.end()));
    std::shuffle(v.begin(), v.end(), rng);
    ASSERT_EQ(MedianBoost(v), m);
    const auto below = std::count_if(v.begin(), v.end(),
                                     [m](double x) { return x < m; });
    ASSERT_LE(below, static_cast<long>(v.size() / 2));
  }
}

TEST(PropertyTest, StreamDistanceIsAMetric) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const Stream a = RandomElements(rng, 20, 3);
    const Stream b = RandomElements(rng, 20, 3);
    const Stream c = RandomElements(rng, 20, 3);
    ASSERT_EQ(StreamDistance(a, a), 0);
    ASSERT_EQ(StreamDistance(a, b), StreamDistance(b, a));
    ASSERT_LE(StreamDistance(a, c), StreamDistance(a, b) + StreamDistance(b, c));
  }
}

TEST(PropertyTest, StreamFileRoundTrip) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const uint64_t n = std::uniform_int_distribution<uint64_t>(1, 1000)(rng);
    const Stream s = RandomElements(rng, 100, n);
    const StreamConfig cfg{100, n, StreamMode::kElements};
    std::stringstream buf;
    WriteStream(buf, s, cfg);
    const StreamFile f = ReadStream(buf);
    ASSERT_EQ(f.events, s);
    ASSERT_EQ(f.config.n, n);
  }
}

TEST(PropertyTest, BudgetSplitsNeverOverspend) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const int64_t parts = std::uniform_int_distribution<int64_t>(1, 5000)(rng);
    const double eps = 0.01 + 5.0 * std::uniform_real_distribution<>(0, 1)(rng);
    MechanismBudget b(eps, 0.1);
    b.ChargeEach("part", parts, eps / double(parts), 0.1 / double(parts));
    ASSERT_TRUE(b.EpsilonExhausted());
    ASSERT_LE(b.spent_epsilon(), eps * (1 + 1e-9));
  }
}

TEST(PropertyTest, ExactWindowHistogramWithinFactor) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const int64_t W = std::uniform_int_distribution<int64_t>(1, 100)(rng);
    const double q = std::uniform_real_distribution<>(0.02, 0.98)(rng);
    std::bernoulli_distribution bit(q);
    Stream s;
    for (int t = 0; t < 600; ++t) s.push_back(StreamEvent::Integer(bit(rng)));
    SmoothHistogram h(
        {W, {0.1, 0.1}, 0.0, 0},
        [](NoiseContext) { return std::make_unique<ExactCountEstimator>(); },
        NoiseContext(1, true));
    for (int64_t t = 1; t <= 600; ++t) {
      const double out = h.Feed(s[t - 1]);
      double exact = 0;
      for (const StreamEvent& e : WindowView(s, t, {W})) exact += e.SumValue();
      ASSERT_LE(out, exact / 0.8 + 1e-9);
      ASSERT_GE(out, exact * 0.8 - 1e-9);
    }
  }
}

}  // namespace
}  // namespace dpstream
