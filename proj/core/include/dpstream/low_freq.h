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

// Counts of elements whose frequency is exactly j, for every j in [1, k].
//
// With a small universe each j has a differencing stream whose running total
// is the number of elements at frequency j: an arrival moving an element
// from frequency j-1 to j adds +1 to stream j and -1 to stream j-1. With a
// general universe, elements are subsampled into geometric levels and the
// level matching a private distinct-count estimate is rescaled.

#ifndef DPSTREAM_LOW_FREQ_H_
#define DPSTREAM_LOW_FREQ_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "dpstream/budget.h"
#include "dpstream/distinct.h"
#include "dpstream/estimator.h"
#include "dpstream/random.h"
#include "dpstream/sensitivity.h"
#include "dpstream/summing.h"

namespace dpstream {

// Releases k counts per timestamp.
class FrequencyCountEstimator {
 public:
  virtual ~FrequencyCountEstimator() = default;

  virtual void Observe(const StreamEvent& event) = 0;
  // Index j-1 holds the estimate for frequency j.
  virtual std::vector<double> Estimates() const = 0;
  virtual int64_t time() const = 0;
  virtual int k() const = 0;

  std::vector<double> Feed(const StreamEvent& event) {
    Observe(event);
    return Estimates();
  }
};

// A change at one timestamp moves each differencing stream by at most 8.
inline constexpr int kCounterStreamSensitivity = 8;

// The k differencing streams as derived count streams.
DerivedTuple FrequencyCounterMapping(StreamView stream, int k);

struct LowFreqSmallParams {
  uint64_t universe = 1;
  int k = 1;
  // Every counter runs a tree with this horizon, epsilon and xi.
  TreeParams counter;

  void Validate() const;
};

class LowFreqSmall final : public FrequencyCountEstimator {
 public:
  LowFreqSmall(LowFreqSmallParams params, NoiseContext ctx);

  void Observe(const StreamEvent& event) override;
  std::vector<double> Estimates() const override;
  int64_t time() const override { return bank_.time(); }
  int k() const override { return params_.k; }

  double Estimate(int j) const;
  // Exact total of counter j, i.e. |{a : f_a = j}|.
  int64_t exact(int j) const;
  int64_t frequency(uint64_t id) const;
  Guarantee guarantee() const;
  const LowFreqSmallParams& params() const { return params_; }

 private:
  LowFreqSmallParams params_;
  TreeCounterBank bank_;
  std::unordered_map<uint64_t, int64_t> freq_;
};

struct LowFreqGeneralParams {
  int k = 1;
  double eta = 0.1;
  int levels = 1;                  // ceil(log2 min(n, T))
  int lambda = 4;                  // independence of the level hash
  double theory_bucket_range = 1;  // 100 (25600 lambda / eta^2)^2
  uint64_t bucket_range = 1;
  LowFreqSmallParams level;        // per level, universe = bucket_range
  Guarantee distinct;              // (alpha, gamma) of the distinct estimate

  // 64 lambda / eta^2: the expected level size the selection aims for.
  double LevelTarget() const;
  // max(3 gamma_distinct, LevelTarget()).
  double ZeroThreshold() const;

  static LowFreqGeneralParams Plan(uint64_t n, int64_t T, double eta, int k,
                                   const TreeParams& counter,
                                   Guarantee distinct);
};

class LowFreqGeneral final : public FrequencyCountEstimator {
 public:
  LowFreqGeneral(LowFreqGeneralParams params,
                 std::unique_ptr<ContinualEstimator> distinct,
                 NoiseContext ctx);
  // Uses a caller-provided router (tests force level assignments this way).
  LowFreqGeneral(LowFreqGeneralParams params, LevelRouter router,
                 std::unique_ptr<ContinualEstimator> distinct,
                 NoiseContext ctx);

  void Observe(const StreamEvent& event) override;
  std::vector<double> Estimates() const override;
  int64_t time() const override { return t_; }
  int k() const override { return params_.k; }

  double distinct_estimate() const { return distinct_->Estimate(); }
  // The level used at the current timestamp; empty when the zero rule
  // applies or no level is shallow enough.
  std::optional<int> SelectedLevel() const;
  const LowFreqSmall& level(int i) const { return *level_.at(i - 1); }
  const LevelRouter& router() const { return router_; }
  const LowFreqGeneralParams& params() const { return params_; }

 private:
  void Build(NoiseContext& ctx);

  LowFreqGeneralParams params_;
  LevelRouter router_;
  std::unique_ptr<ContinualEstimator> distinct_;
  std::vector<std::unique_ptr<LowFreqSmall>> level_;
  int64_t t_ = 0;
};

// Per-j median of independent copies, optionally clamped at zero.
class LowFreqMedian final : public FrequencyCountEstimator {
 public:
  LowFreqMedian(std::vector<std::unique_ptr<FrequencyCountEstimator>> copies,
                bool clamp);

  void Observe(const StreamEvent& event) override;
  std::vector<double> Estimates() const override;
  int64_t time() const override { return copies_.front()->time(); }
  int k() const override { return copies_.front()->k(); }

  size_t copies() const { return copies_.size(); }
  const FrequencyCountEstimator& copy(size_t i) const { return *copies_[i]; }

 private:
  std::vector<std::unique_ptr<FrequencyCountEstimator>> copies_;
  bool clamp_;
};

struct LowFreqConfig {
  int k = 1;
  double epsilon = 1.0;
  double eta = 0.1;
  double xi = 0.05;
  uint64_t n = 1;
  int64_t T = 1;
  UniverseRegime regime = UniverseRegime::kAuto;
  uint64_t small_universe_limit = uint64_t{1} << 14;
  // Relative error requested from the inner distinct estimator; 0.025 makes
  // its general-regime factor (1 + 4 eta) equal 1.1.
  double distinct_eta = 0.025;
  // Replaces the planned additive error of the distinct estimate in the
  // zero rule. Tests use it to exercise level selection at small scale.
  std::optional<double> distinct_additive;
  bool clamp = false;
  DeskCaps caps;

  void Validate() const;
};

struct LowFreqPlan {
  LowFreqConfig config;
  bool small = true;
  int64_t theory_copies = 1;
  int64_t copies = 1;
  // Budget of each subroutine inside one copy: the level tuple costs twice
  // this (two levels can change), the distinct estimate once.
  double sub_epsilon = 0;
  LowFreqSmallParams small_params;
  LowFreqGeneralParams general_params;
  DistinctPlan distinct_plan;
  MechanismBudget budget{1.0, 0.0};
};

LowFreqPlan PlanLowFreq(const LowFreqConfig& config);
std::unique_ptr<FrequencyCountEstimator> MakeLowFreqEstimator(
    const LowFreqPlan& plan, NoiseContext ctx);

// Exact |{a : f_a = j}| for j = 1..k.
std::vector<int64_t> ExactLowFrequencyCounts(const FrequencyTable& table,
                                             int k);

}  // namespace dpstream

#endif  // DPSTREAM_LOW_FREQ_H_
