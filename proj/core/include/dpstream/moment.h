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

// Continual-release l_p frequency moments.
//
// Frequencies up to a cutoff k are handled by exact-frequency counts. Above
// it, frequencies are bucketed into geometric intervals with a random base;
// the heavy hitters of the full stream and of geometrically subsampled
// streams give, per interval, a count of elements which is rescaled by the
// sampling rate and weighted by the interval's lower boundary.

#ifndef DPSTREAM_MOMENT_H_
#define DPSTREAM_MOMENT_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "dpstream/budget.h"
#include "dpstream/estimator.h"
#include "dpstream/heavy_hitters.h"
#include "dpstream/low_freq.h"
#include "dpstream/random.h"
#include "dpstream/sensitivity.h"

namespace dpstream {

// A point of the grid of spacing (eta/T)^c on [1/2, 1] near a uniform draw.
// Noise-off contexts return 3/4. When the spacing underflows double
// precision the uniform draw itself is returned.
double SampleIntervalBase(NoiseContext& ctx, double eta, int64_t T, int c);

struct IntervalIndex {
  enum class Kind { kBelow, kInside, kAbove };
  Kind kind = Kind::kBelow;
  int64_t q = 0;  // meaningful when kind == kInside

  static IntervalIndex Below() { return {Kind::kBelow, 0}; }
  static IntervalIndex Above() { return {Kind::kAbove, 0}; }
  static IntervalIndex Inside(int64_t q) { return {Kind::kInside, q}; }
  friend bool operator==(const IntervalIndex&, const IntervalIndex&) = default;
};

// Intervals I_q = (base (1+eta)^q, base (1+eta)^(q+1)] for q in
// [first, last], and the cutoff k below them.
struct IntervalGeometry {
  double base = 0.75;
  double eta = 0.25;
  int64_t first = 0;  // smallest q with base (1+eta)^q > threshold
  int64_t last = -1;  // smallest q with base (1+eta)^(q+1) >= T
  int64_t cutoff = 1; // floor(base (1+eta)^first), at most T

  // base (1+eta)^q.
  double Boundary(int64_t q) const;
  int64_t count() const { return last >= first ? last - first + 1 : 0; }
  IntervalIndex Locate(double f) const;

  // Frequencies above max(threshold, 1) go to intervals.
  static IntervalGeometry Build(double base, double eta, double threshold,
                                int64_t T);
};

// Total mass of the intervals that carry at least an eta / count fraction
// of F_p, plus all frequencies <= cutoff (singleton intervals always
// count).
struct ContributingSet {
  std::vector<int64_t> intervals;
  double contributing_mass = 0;
  double total_mass = 0;
};

ContributingSet ContributingIntervals(const FrequencyTable& table,
                                      const IntervalGeometry& geometry,
                                      double p);

// Level streams S_0 (the full stream) and S_1..S_L (the subsamples), as
// symbol streams.
DerivedTuple MomentLevelMapping(const GeometricLevelHash& level_hash,
                                StreamView stream);

struct MomentConfig {
  double p = 2.0;
  double epsilon = 1.0;
  double eta = 0.25;
  double xi = 0.05;
  uint64_t n = 1;
  int64_t T = 1;
  // Grid exponent of the random interval base.
  int beta_c = 3;
  // Replaces the heavy-hitter reporting threshold.
  std::optional<double> tau;
  // Caps the heavy-hitter parameter k (the 1/B fraction); 0 means none.
  int64_t max_heavy_k = 0;
  // Precision of the low-frequency counts in the general regime.
  double low_freq_eta = 0.25;
  uint64_t low_freq_small_limit = uint64_t{1} << 14;
  // Heavy hitters treat their sketches as exact (noise-off testing).
  bool exact_backends = false;
  // Clamp low-frequency counts at zero before combining.
  bool clamp = true;
  DeskCaps caps;

  void Validate() const;
};

struct MomentPlan {
  MomentConfig config;
  int64_t theory_copies = 1;
  int64_t copies = 1;
  double sub_epsilon = 0;     // epsilon / (4 copies)
  double heavy_xi = 0;        // xi / (4 theory copies (L+1))
  double low_freq_xi = 0;     // xi / (3 theory copies)
  int levels = 1;             // ceil(log2 n)
  int lambda = 4;
  double theory_heavy_k = 1;  // B
  int64_t heavy_k = 1;
  int64_t heavy_set_cap = 1;  // bound on |H_i|
  double precision = 0;       // eta / (10000 (L+1) |H| cap)
  double tau = 0;
  HHPlan heavy;
  MechanismBudget budget{1.0, 0.0};

  // Per-copy low-frequency configuration for a given cutoff.
  LowFreqConfig LowFreqFor(int64_t cutoff) const;
};

MomentPlan PlanMoment(const MomentConfig& config);

// One copy of the moment estimator.
class MomentCopy final : public ContinualEstimator {
 public:
  MomentCopy(const MomentPlan& plan, NoiseContext ctx);

  void Observe(const StreamEvent& event) override;
  double Estimate() const override;
  int64_t time() const override { return t_; }

  const IntervalGeometry& geometry() const { return geometry_; }
  // Per interval q (index q - first): the rescaled count z_q.
  std::vector<double> IntervalCounts() const;
  // Sum over intervals of z_q base(q)^p.
  double HighPart() const;
  // Sum over l <= cutoff of s_l l^p.
  double LowPart() const;
  const HeavyHitterEstimator& heavy(int level) const {
    return *heavy_.at(static_cast<size_t>(level));
  }
  const FrequencyCountEstimator& low_freq() const { return *low_; }
  const GeometricLevelHash& level_hash() const { return level_hash_; }

 private:
  MomentPlan plan_;
  IntervalGeometry geometry_;
  GeometricLevelHash level_hash_;
  std::vector<std::unique_ptr<HeavyHitterEstimator>> heavy_;
  std::unique_ptr<FrequencyCountEstimator> low_;
  int64_t t_ = 0;
};

// Median over copies.
std::unique_ptr<ContinualEstimator> MakeMomentEstimator(const MomentPlan& plan,
                                                        NoiseContext ctx);

}  // namespace dpstream

#endif  // DPSTREAM_MOMENT_H_
