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

#include "dpstream/distinct.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "dpstream/errors.h"

namespace dpstream {

int FirstArrivalIndicator::Step(const StreamEvent& event) {
  if (!event.is_element()) return 0;
  return seen_.insert(event.element()).second ? 1 : 0;
}

DerivedTuple FirstArrivalMapping(StreamView stream) {
  FirstArrivalIndicator indicator;
  DerivedStream out;
  out.values.reserve(stream.size());
  for (const StreamEvent& e : stream) out.values.push_back(indicator.Step(e));
  return {out};
}

SmallUniverseDistinct::SmallUniverseDistinct(SmallDistinctParams params,
                                             NoiseContext ctx)
    : params_(params) {
  if (params_.universe < 1) throw ConfigError("universe must be >= 1");
  inner_ = MakeSummingMechanism(params_.summing, ctx);
}

void SmallUniverseDistinct::Observe(const StreamEvent& event) {
  if (event.is_integer()) throw ModeError("distinct counting needs elements");
  if (event.is_element() && event.element() >= params_.universe) {
    throw DomainError("element id " + std::to_string(event.element()) +
                      " outside universe of size " +
                      std::to_string(params_.universe));
  }
  inner_->Feed(indicator_.Step(event));
}

LevelRouter::LevelRouter(int levels, int independence, uint64_t bucket_range,
                         NoiseContext& ctx)
    : bucket_hash_(2, bucket_range, ctx),
      level_hash_(levels, independence, ctx) {}

std::optional<LevelRouter::Route> LevelRouter::operator()(
    const StreamEvent& event) const {
  if (!event.is_element()) return std::nullopt;
  const std::optional<int> level = level_hash_.Level(event.element());
  if (!level) return std::nullopt;
  return Route{*level, bucket_hash_(event.element())};
}

DerivedTuple LevelStreamsMapping(const LevelRouter& router, StreamView stream) {
  const int L = router.levels();
  DerivedTuple out(static_cast<size_t>(L));
  for (DerivedStream& d : out) {
    d.kind = DerivedStream::Kind::kSymbols;
    d.values.assign(stream.size(), kEmptySymbol);
  }
  for (size_t t = 0; t < stream.size(); ++t) {
    if (auto r = router(stream[t])) {
      out[r->level - 1].values[t] = static_cast<int64_t>(r->bucket);
    }
  }
  return out;
}

DerivedTuple LevelIndicatorMapping(const LevelRouter& router,
                                   StreamView stream) {
  const int L = router.levels();
  DerivedTuple out(static_cast<size_t>(L));
  std::vector<FirstArrivalIndicator> indicators(static_cast<size_t>(L));
  for (DerivedStream& d : out) d.values.assign(stream.size(), 0);
  for (size_t t = 0; t < stream.size(); ++t) {
    if (auto r = router(stream[t])) {
      out[r->level - 1].values[t] =
          indicators[r->level - 1].Step(StreamEvent::Element(r->bucket));
    }
  }
  return out;
}

SubsampledDistinctParams SubsampledDistinctParams::Plan(
    uint64_t n, int64_t T, double eta, const SummingSpec& summing) {
  if (n < 1 || T < 1) throw ConfigError("n and T must be >= 1");
  if (!(eta > 0.0 && eta < 0.5)) throw ConfigError("eta must lie in (0, 0.5)");
  SubsampledDistinctParams p;
  const uint64_t span = std::min<uint64_t>(n, static_cast<uint64_t>(T));
  p.levels = std::max(1, CeilLog2(span));
  p.lambda = RoundUpEvenAtLeast4(2.0 * std::log2(1000.0 * p.levels));
  p.eta = eta;
  p.summing = summing;
  p.summing.horizon = T;
  p.inner = SummingGuarantee(p.summing);
  const double alpha = p.inner.alpha;
  p.threshold = std::max(p.inner.gamma / eta,
                         32.0 * alpha * p.lambda / (eta * eta));
  const double root = 16.0 * alpha * p.threshold;
  p.theory_bucket_range = 100.0 * p.levels * root * root;
  p.bucket_range = ClampHashRange(p.theory_bucket_range);
  return p;
}

SubsampledDistinct::SubsampledDistinct(SubsampledDistinctParams params,
                                       NoiseContext ctx)
    : params_(params) {
  router_ = LevelRouter(params_.levels, params_.lambda, params_.bucket_range,
                        ctx);
  Build(ctx);
}

SubsampledDistinct::SubsampledDistinct(SubsampledDistinctParams params,
                                       LevelRouter router, NoiseContext ctx)
    : params_(params), router_(std::move(router)) {
  if (router_.levels() != params_.levels) {
    throw ConfigError("router level count differs from the parameters");
  }
  Build(ctx);
}

void SubsampledDistinct::Build(NoiseContext& ctx) {
  SmallDistinctParams level_params{params_.bucket_range, params_.summing};
  for (int i = 1; i <= params_.levels; ++i) {
    level_.push_back(std::make_unique<SmallUniverseDistinct>(
        level_params, ctx.Derive(static_cast<uint64_t>(i))));
  }
}

void SubsampledDistinct::Observe(const StreamEvent& event) {
  if (event.is_integer()) throw ModeError("distinct counting needs elements");
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

double SubsampledDistinct::LevelEstimate(int level) const {
  if (level < 1 || level > params_.levels) {
    throw IndexError("level out of range");
  }
  return level_[level - 1]->Estimate();
}

std::optional<int> SubsampledDistinct::SelectedLevel() const {
  for (int i = params_.levels; i >= 1; --i) {
    if (level_[i - 1]->Estimate() >= params_.threshold) return i;
  }
  return std::nullopt;
}

double SubsampledDistinct::Estimate() const {
  const std::optional<int> i = SelectedLevel();
  if (!i) return 0.0;
  return LevelEstimate(*i) * std::ldexp(1.0, *i);
}

void DistinctConfig::Validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("epsilon must be positive and finite");
  }
  if (!(eta > 0.0 && eta < 0.5)) throw ConfigError("eta must lie in (0, 0.5)");
  if (!(xi > 0.0 && xi < 0.5)) throw ConfigError("xi must lie in (0, 0.5)");
  if (n < 1 || T < 1) throw ConfigError("n and T must be >= 1");
}

DistinctPlan PlanDistinct(const DistinctConfig& config) {
  config.Validate();
  DistinctPlan plan;
  plan.config = config;
  plan.budget = MechanismBudget(config.epsilon, config.xi);
  plan.small = config.regime == UniverseRegime::kSmall ||
               (config.regime == UniverseRegime::kAuto &&
                config.n <= config.small_universe_limit);
  if (plan.small) {
    plan.copy_epsilon = config.epsilon;
    plan.small_params.universe = config.n;
    plan.small_params.summing =
        SummingSpec{config.variant, config.T,
                    config.epsilon / kFirstArrivalSensitivity, config.eta,
                    config.xi};
    plan.budget.Charge("first_arrival_summer", config.epsilon, config.xi);
    return plan;
  }
  plan.theory_copies = FiftyLogCopies(
      std::log(2.0 * static_cast<double>(config.T) / config.xi));
  plan.copies = config.caps.Copies(plan.theory_copies);
  plan.copy_epsilon = config.epsilon / static_cast<double>(plan.copies);
  const uint64_t span = std::min<uint64_t>(config.n,
                                           static_cast<uint64_t>(config.T));
  const int levels = std::max(1, CeilLog2(span));
  const double summer_xi = (config.xi / 2.0) /
                           (levels * static_cast<double>(plan.theory_copies));
  const SummingSpec summing{config.variant, config.T,
                            plan.copy_epsilon / kFirstArrivalSensitivity,
                            config.eta, summer_xi};
  plan.level_params =
      SubsampledDistinctParams::Plan(config.n, config.T, config.eta, summing);
  plan.budget.ChargeEach("copy", plan.copies, plan.copy_epsilon,
                         levels * summer_xi);
  plan.budget.Charge("median", 0.0, config.xi / 2.0);
  return plan;
}

std::unique_ptr<ContinualEstimator> MakeDistinctEstimator(
    const DistinctPlan& plan, NoiseContext ctx) {
  if (plan.small) {
    return std::make_unique<SmallUniverseDistinct>(plan.small_params, ctx);
  }
  std::vector<std::unique_ptr<ContinualEstimator>> copies;
  copies.reserve(static_cast<size_t>(plan.copies));
  for (int64_t i = 0; i < plan.copies; ++i) {
    copies.push_back(std::make_unique<SubsampledDistinct>(
        plan.level_params, ctx.Derive(static_cast<uint64_t>(i))));
  }
  return std::make_unique<MedianOfCopies>(std::move(copies));
}

Guarantee DistinctGuarantee(const DistinctPlan& plan) {
  if (plan.small) return SummingGuarantee(plan.small_params.summing);
  const SubsampledDistinctParams& p = plan.level_params;
  const double alpha = p.inner.alpha;
  return {(1.0 + 4.0 * p.eta) * alpha, 32.0 * alpha * alpha * p.threshold};
}

}  // namespace dpstream
