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

#include <algorithm>
#include <cmath>
#include <string>

#include "dpstream/errors.h"

namespace dpstream {
namespace {

constexpr uint64_t kDistinctLabel = 0x64686174;  // "dhat"

}  // namespace

DerivedTuple FrequencyCounterMapping(StreamView stream, int k) {
  DerivedTuple out(static_cast<size_t>(k));
  for (DerivedStream& d : out) d.values.assign(stream.size(), 0);
  std::unordered_map<uint64_t, int64_t> freq;
  for (size_t t = 0; t < stream.size(); ++t) {
    if (!stream[t].is_element()) continue;
    const int64_t f = ++freq[stream[t].element()];
    if (f <= k) out[f - 1].values[t] += 1;
    if (f - 1 >= 1 && f - 1 <= k) out[f - 2].values[t] -= 1;
  }
  return out;
}

void LowFreqSmallParams::Validate() const {
  if (universe < 1) throw ConfigError("universe must be >= 1");
  if (k < 1) throw ConfigError("k must be >= 1");
  counter.Validate();
}

LowFreqSmall::LowFreqSmall(LowFreqSmallParams params, NoiseContext ctx)
    : params_((params.Validate(), params)),
      bank_(static_cast<uint64_t>(params.k), params.counter, ctx) {}

void LowFreqSmall::Observe(const StreamEvent& event) {
  if (event.is_integer()) {
    throw ModeError("frequency counting needs elements");
  }
  if (event.is_element() && event.element() >= params_.universe) {
    throw DomainError("element id " + std::to_string(event.element()) +
                      " outside universe of size " +
                      std::to_string(params_.universe));
  }
  bank_.Advance();
  if (!event.is_element()) return;
  const int64_t f = ++freq_[event.element()];
  // Counter index j-1 tracks frequency j.
  if (f <= params_.k) bank_.Add(static_cast<uint64_t>(f - 1), 1);
  if (f - 1 >= 1 && f - 1 <= params_.k) {
    bank_.Add(static_cast<uint64_t>(f - 2), -1);
  }
}

double LowFreqSmall::Estimate(int j) const {
  if (j < 1 || j > params_.k) throw IndexError("frequency out of range");
  return bank_.Estimate(static_cast<uint64_t>(j - 1));
}

std::vector<double> LowFreqSmall::Estimates() const {
  std::vector<double> out(static_cast<size_t>(params_.k));
  for (int j = 1; j <= params_.k; ++j) out[j - 1] = Estimate(j);
  return out;
}

int64_t LowFreqSmall::exact(int j) const {
  if (j < 1 || j > params_.k) throw IndexError("frequency out of range");
  return bank_.exact(static_cast<uint64_t>(j - 1));
}

int64_t LowFreqSmall::frequency(uint64_t id) const {
  auto it = freq_.find(id);
  return it == freq_.end() ? 0 : it->second;
}

Guarantee LowFreqSmall::guarantee() const {
  const TreeParams& c = params_.counter;
  return {1.0, BinaryTreeMechanism::ErrorBound(c.horizon, c.epsilon, c.xi)};
}

double LowFreqGeneralParams::LevelTarget() const {
  return 64.0 * lambda / (eta * eta);
}

double LowFreqGeneralParams::ZeroThreshold() const {
  return std::max(3.0 * distinct.gamma, LevelTarget());
}

LowFreqGeneralParams LowFreqGeneralParams::Plan(uint64_t n, int64_t T,
                                                double eta, int k,
                                                const TreeParams& counter,
                                                Guarantee distinct) {
  if (n < 1 || T < 1) throw ConfigError("n and T must be >= 1");
  if (!(eta > 0.0 && eta < 0.5)) throw ConfigError("eta must lie in (0, 0.5)");
  if (k < 1) throw ConfigError("k must be >= 1");
  LowFreqGeneralParams p;
  p.k = k;
  p.eta = eta;
  const uint64_t span = std::min<uint64_t>(n, static_cast<uint64_t>(T));
  p.levels = std::max(1, CeilLog2(span));
  p.lambda = RoundUpEvenAtLeast4(2.0 * std::log2(1000.0 * k));
  const double root = 25600.0 * p.lambda / (eta * eta);
  p.theory_bucket_range = 100.0 * root * root;
  p.bucket_range = ClampHashRange(p.theory_bucket_range);
  p.level = LowFreqSmallParams{p.bucket_range, k, counter};
  p.level.counter.horizon = T;
  p.distinct = distinct;
  return p;
}

LowFreqGeneral::LowFreqGeneral(LowFreqGeneralParams params,
                               std::unique_ptr<ContinualEstimator> distinct,
                               NoiseContext ctx)
    : params_(params), distinct_(std::move(distinct)) {
  router_ = LevelRouter(params_.levels, params_.lambda, params_.bucket_range,
                        ctx);
  Build(ctx);
}

LowFreqGeneral::LowFreqGeneral(LowFreqGeneralParams params, LevelRouter router,
                               std::unique_ptr<ContinualEstimator> distinct,
                               NoiseContext ctx)
    : params_(params),
      router_(std::move(router)),
      distinct_(std::move(distinct)) {
  if (router_.levels() != params_.levels) {
    throw ConfigError("router level count differs from the parameters");
  }
  Build(ctx);
}

void LowFreqGeneral::Build(NoiseContext& ctx) {
  if (!distinct_) throw ConfigError("a distinct-count estimator is required");
  for (int i = 1; i <= params_.levels; ++i) {
    level_.push_back(std::make_unique<LowFreqSmall>(
        params_.level, ctx.Derive(static_cast<uint64_t>(i))));
  }
}

void LowFreqGeneral::Observe(const StreamEvent& event) {
  if (event.is_integer()) {
    throw ModeError("frequency counting needs elements");
  }
  distinct_->Observe(event);
  const std::optional<LevelRouter::Route> route = router_(event);
  for (int i = 1; i <= params_.levels; ++i) {
    if (route && route->level == i) {
      level_[i - 1]->Observe(StreamEvent::Element(route->bucket));
    } else {
      level_[i - 1]->Observe(StreamEvent::Empty());
    }
  }
  ++t_;
}

std::optional<int> LowFreqGeneral::SelectedLevel() const {
  const double d = distinct_->Estimate();
  if (d <= params_.ZeroThreshold()) return std::nullopt;
  const double target = params_.LevelTarget();
  for (int i = params_.levels; i >= 1; --i) {
    if (std::ldexp(target, i) <= d) return i;
  }
  return std::nullopt;
}

std::vector<double> LowFreqGeneral::Estimates() const {
  std::vector<double> out(static_cast<size_t>(params_.k), 0.0);
  const std::optional<int> i = SelectedLevel();
  if (!i) return out;
  const LowFreqSmall& lvl = *level_[*i - 1];
  for (int j = 1; j <= params_.k; ++j) {
    out[j - 1] = std::ldexp(lvl.Estimate(j), *i);
  }
  return out;
}

LowFreqMedian::LowFreqMedian(
    std::vector<std::unique_ptr<FrequencyCountEstimator>> copies, bool clamp)
    : copies_(std::move(copies)), clamp_(clamp) {
  if (copies_.empty()) throw ConfigError("at least one copy is required");
}

void LowFreqMedian::Observe(const StreamEvent& event) {
  for (auto& c : copies_) c->Observe(event);
}

std::vector<double> LowFreqMedian::Estimates() const {
  const int kk = k();
  std::vector<std::vector<double>> per_copy;
  per_copy.reserve(copies_.size());
  for (const auto& c : copies_) per_copy.push_back(c->Estimates());
  std::vector<double> out(static_cast<size_t>(kk));
  std::vector<double> column(copies_.size());
  for (int j = 0; j < kk; ++j) {
    for (size_t c = 0; c < copies_.size(); ++c) column[c] = per_copy[c][j];
    out[j] = MedianBoost(column);
    if (clamp_) out[j] = std::max(0.0, out[j]);
  }
  return out;
}

void LowFreqConfig::Validate() const {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("epsilon must be positive and finite");
  }
  if (!(eta > 0.0 && eta < 0.5)) throw ConfigError("eta must lie in (0, 0.5)");
  if (!(distinct_eta > 0.0 && distinct_eta < 0.5)) {
    throw ConfigError("distinct_eta must lie in (0, 0.5)");
  }
  if (!(xi > 0.0 && xi < 0.5)) throw ConfigError("xi must lie in (0, 0.5)");
  if (n < 1 || T < 1) throw ConfigError("n and T must be >= 1");
  if (distinct_additive && !(*distinct_additive >= 0.0)) {
    throw ConfigError("distinct_additive must be >= 0");
  }
}

LowFreqPlan PlanLowFreq(const LowFreqConfig& config) {
  config.Validate();
  LowFreqPlan plan;
  plan.config = config;
  plan.budget = MechanismBudget(config.epsilon, config.xi);
  plan.small = config.regime == UniverseRegime::kSmall ||
               (config.regime == UniverseRegime::kAuto &&
                config.n <= config.small_universe_limit);
  const double k = config.k;
  if (plan.small) {
    plan.sub_epsilon = config.epsilon;
    plan.small_params.universe = config.n;
    plan.small_params.k = config.k;
    plan.small_params.counter =
        TreeParams{config.T, config.epsilon / (kCounterStreamSensitivity * k),
                   config.xi / k};
    plan.budget.Charge("frequency_counters", config.epsilon, config.xi);
    return plan;
  }
  plan.theory_copies = FiftyLogCopies(
      std::log(3.0 * static_cast<double>(config.T) / config.xi));
  plan.copies = config.caps.Copies(plan.theory_copies);
  const double copies = static_cast<double>(plan.copies);
  const double theory = static_cast<double>(plan.theory_copies);
  plan.sub_epsilon = config.epsilon / (3.0 * copies);

  const double distinct_xi = config.xi / (3.0 * theory);
  DistinctConfig dc;
  dc.epsilon = plan.sub_epsilon;
  dc.eta = config.distinct_eta;
  dc.xi = distinct_xi;
  dc.n = config.n;
  dc.T = config.T;
  dc.caps = config.caps;
  plan.distinct_plan = PlanDistinct(dc);
  Guarantee distinct = DistinctGuarantee(plan.distinct_plan);
  if (config.distinct_additive) distinct.gamma = *config.distinct_additive;

  const uint64_t span = std::min<uint64_t>(config.n,
                                           static_cast<uint64_t>(config.T));
  const int levels = std::max(1, CeilLog2(span));
  const double level_xi = config.xi / (3.0 * theory * levels);
  const TreeParams counter{
      config.T, plan.sub_epsilon / (kCounterStreamSensitivity * k),
      level_xi / k};
  plan.general_params = LowFreqGeneralParams::Plan(
      config.n, config.T, config.eta, config.k, counter, distinct);
  plan.budget.ChargeEach("copy", plan.copies, 3.0 * plan.sub_epsilon,
                         levels * level_xi + distinct_xi);
  plan.budget.Charge("median", 0.0, config.xi / 3.0);
  return plan;
}

std::unique_ptr<FrequencyCountEstimator> MakeLowFreqEstimator(
    const LowFreqPlan& plan, NoiseContext ctx) {
  std::vector<std::unique_ptr<FrequencyCountEstimator>> copies;
  if (plan.small) {
    copies.push_back(std::make_unique<LowFreqSmall>(plan.small_params, ctx));
  } else {
    copies.reserve(static_cast<size_t>(plan.copies));
    for (int64_t i = 0; i < plan.copies; ++i) {
      NoiseContext copy_ctx = ctx.Derive(static_cast<uint64_t>(i));
      copies.push_back(std::make_unique<LowFreqGeneral>(
          plan.general_params,
          MakeDistinctEstimator(plan.distinct_plan,
                                copy_ctx.Derive(kDistinctLabel)),
          copy_ctx));
    }
  }
  return std::make_unique<LowFreqMedian>(std::move(copies),
                                         plan.config.clamp);
}

std::vector<int64_t> ExactLowFrequencyCounts(const FrequencyTable& table,
                                             int k) {
  std::vector<int64_t> out(static_cast<size_t>(std::max(k, 0)), 0);
  for (const auto& [id, f] : table.counts()) {
    if (f >= 1 && f <= k) ++out[f - 1];
  }
  return out;
}

}  // namespace dpstream
