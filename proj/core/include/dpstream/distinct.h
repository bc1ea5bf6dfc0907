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

// Continual-release distinct counting. Small universes reduce to summing a
// first-arrival indicator; general universes subsample elements into
// geometric levels and report the deepest level whose noisy count clears a
// threshold, scaled by its sampling rate.

#ifndef DPSTREAM_DISTINCT_H_
#define DPSTREAM_DISTINCT_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <unordered_set>
#include <vector>

#include "dpstream/budget.h"
#include "dpstream/estimator.h"
#include "dpstream/random.h"
#include "dpstream/sensitivity.h"
#include "dpstream/summing.h"

namespace dpstream {

// 1 when a non-empty element arrives for the first time, else 0.
class FirstArrivalIndicator {
 public:
  int Step(const StreamEvent& event);
  int64_t seen() const { return static_cast<int64_t>(seen_.size()); }

 private:
  std::unordered_set<uint64_t> seen_;
};

// The indicator stream as a derived count stream (sensitivity <= 5).
DerivedTuple FirstArrivalMapping(StreamView stream);

// Number of summed streams one input can disturb, times the per-stream
// budget, gives the privacy cost of the reduction.
inline constexpr int kFirstArrivalSensitivity = 5;

struct SmallDistinctParams {
  uint64_t universe = 1;
  // Inner summing mechanism; its epsilon is the per-summer budget.
  SummingSpec summing;
};

class SmallUniverseDistinct final : public ContinualEstimator {
 public:
  SmallUniverseDistinct(SmallDistinctParams params, NoiseContext ctx);

  void Observe(const StreamEvent& event) override;
  double Estimate() const override { return inner_->Estimate(); }
  int64_t time() const override { return inner_->time(); }

  Guarantee guarantee() const { return inner_->guarantee(); }
  int64_t exact_distinct() const { return indicator_.seen(); }

 private:
  SmallDistinctParams params_;
  FirstArrivalIndicator indicator_;
  std::unique_ptr<SummingMechanism> inner_;
};

// Routes an element to (level, bucket): the bucket comes from a pairwise
// hash into [m], the level from a geometric level hash. Elements whose level
// is empty are dropped.
class LevelRouter {
 public:
  struct Route {
    int level;
    uint64_t bucket;
  };

  LevelRouter() = default;
  LevelRouter(int levels, int independence, uint64_t bucket_range,
              NoiseContext& ctx);

  std::optional<Route> operator()(const StreamEvent& event) const;
  int levels() const { return level_hash_.levels(); }
  const PolyHash& bucket_hash() const { return bucket_hash_; }
  const GeometricLevelHash& level_hash() const { return level_hash_; }

 private:
  PolyHash bucket_hash_;
  GeometricLevelHash level_hash_;
};

// Level i's substream (bucket ids or the empty symbol), one symbol stream
// per level.
DerivedTuple LevelStreamsMapping(const LevelRouter& router, StreamView stream);
// First-arrival indicators of each level substream, one count stream per
// level: the inputs of the per-level summing mechanisms.
DerivedTuple LevelIndicatorMapping(const LevelRouter& router,
                                   StreamView stream);

struct SubsampledDistinctParams {
  int levels = 1;        // ceil(log2 min(n, T))
  int lambda = 4;        // independence of the level hash
  double eta = 0.1;
  Guarantee inner;       // (alpha, gamma) of each level summer
  double threshold = 0;  // max(gamma/eta, 32 alpha lambda / eta^2)
  double theory_bucket_range = 1;  // 100 L (16 alpha threshold)^2
  uint64_t bucket_range = 1;       // the above clamped to the field size
  SummingSpec summing;             // per level

  // Derives every field from (n, T, eta) and the level summer spec.
  static SubsampledDistinctParams Plan(uint64_t n, int64_t T, double eta,
                                       const SummingSpec& summing);
};

class SubsampledDistinct final : public ContinualEstimator {
 public:
  SubsampledDistinct(SubsampledDistinctParams params, NoiseContext ctx);
  // Uses a caller-provided router (tests force level assignments this way).
  SubsampledDistinct(SubsampledDistinctParams params, LevelRouter router,
                     NoiseContext ctx);

  void Observe(const StreamEvent& event) override;
  double Estimate() const override;
  int64_t time() const override { return t_; }

  // Noisy distinct count of level i (1-based).
  double LevelEstimate(int level) const;
  // The level chosen by the selection rule at the current timestamp.
  std::optional<int> SelectedLevel() const;
  const LevelRouter& router() const { return router_; }
  const SubsampledDistinctParams& params() const { return params_; }

 private:
  void Build(NoiseContext& ctx);

  SubsampledDistinctParams params_;
  LevelRouter router_;
  std::vector<std::unique_ptr<SmallUniverseDistinct>> level_;
  int64_t t_ = 0;
};

enum class UniverseRegime { kAuto, kSmall, kGeneral };

struct DistinctConfig {
  double epsilon = 1.0;
  double eta = 0.1;
  double xi = 0.05;
  uint64_t n = 1;
  int64_t T = 1;
  SummingBackend variant = SummingBackend::kTree;
  UniverseRegime regime = UniverseRegime::kAuto;
  // kAuto picks the small-universe reduction when n is at most this.
  uint64_t small_universe_limit = uint64_t{1} << 20;
  DeskCaps caps;

  void Validate() const;
};

struct DistinctPlan {
  DistinctConfig config;
  bool small = true;
  int64_t theory_copies = 1;
  int64_t copies = 1;
  double copy_epsilon = 0;
  SmallDistinctParams small_params;          // small regime
  SubsampledDistinctParams level_params;     // general regime
  MechanismBudget budget{1.0, 0.0};
};

// Order of evaluation in the general regime: copy count, then the failure
// share of every level summer, then the summers' (alpha, gamma), then the
// bucket range and selection threshold.
DistinctPlan PlanDistinct(const DistinctConfig& config);
std::unique_ptr<ContinualEstimator> MakeDistinctEstimator(
    const DistinctPlan& plan, NoiseContext ctx);

// (alpha, gamma) of the planned estimator. The small regime inherits the
// summer's guarantee; the general regime reports ((1 + 4 eta) alpha,
// 32 alpha^2 threshold) from the level-selection analysis.
Guarantee DistinctGuarantee(const DistinctPlan& plan);

}  // namespace dpstream

#endif  // DPSTREAM_DISTINCT_H_
