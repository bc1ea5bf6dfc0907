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

#include "dpstream/summing.h"

#include <bit>
#include <cmath>
#include <string>

#include "dpstream/errors.h"

namespace dpstream {

std::string_view BackendName(SummingBackend backend) {
  return backend == SummingBackend::kTree ? "tree" : "group";
}

SummingBackend ParseBackend(std::string_view name) {
  if (name == "tree") return SummingBackend::kTree;
  if (name == "group" || name == "grouping") return SummingBackend::kGrouping;
  throw ConfigError("unknown summing backend '" + std::string(name) + "'");
}

namespace {

void CheckEpsilon(double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("epsilon must be positive and finite");
  }
}

void CheckXi(double xi) {
  if (!(xi > 0.0 && xi < 1.0)) throw ConfigError("xi must lie in (0, 1)");
}

uint64_t NodeKey(uint64_t salt, int64_t end, int level) {
  return HashCombine(salt, (static_cast<uint64_t>(end) << 6) |
                               static_cast<uint64_t>(level));
}

}  // namespace

void TreeParams::Validate() const {
  if (horizon < 1) throw ConfigError("horizon T must be >= 1");
  CheckEpsilon(epsilon);
  CheckXi(xi);
}

int BinaryTreeMechanism::Levels(int64_t horizon) {
  return CeilLog2(static_cast<uint64_t>(horizon)) + 1;
}

double BinaryTreeMechanism::NodeScale(int64_t horizon, double epsilon) {
  return static_cast<double>(Levels(horizon)) / epsilon;
}

double BinaryTreeMechanism::ErrorBound(int64_t horizon, double epsilon,
                                       double xi) {
  return Levels(horizon) * NodeScale(horizon, epsilon) *
         std::log(2.0 * static_cast<double>(horizon) / xi);
}

double BinaryTreeMechanism::DecompositionNoise(const NoiseContext& ctx,
                                               uint64_t salt, int64_t t,
                                               double scale) {
  if (ctx.noise_off() || t <= 0) return 0.0;
  double noise = 0.0;
  uint64_t rest = static_cast<uint64_t>(t);
  while (rest != 0) {
    const int level = std::countr_zero(rest);
    // Node covering (rest - 2^level, rest].
    noise += ctx.KeyedLaplace(NodeKey(salt, static_cast<int64_t>(rest), level),
                              scale);
    rest &= rest - 1;
  }
  return noise;
}

BinaryTreeMechanism::BinaryTreeMechanism(TreeParams params, NoiseContext ctx)
    : params_(params), ctx_(ctx) {
  params_.Validate();
  scale_ = NodeScale(params_.horizon, params_.epsilon);
}

double BinaryTreeMechanism::Feed(int64_t x) {
  if (t_ >= params_.horizon) {
    throw StateError("binary tree fed beyond its horizon T=" +
                     std::to_string(params_.horizon));
  }
  ++t_;
  sum_ += x;
  return Estimate();
}

double BinaryTreeMechanism::Estimate() const {
  return static_cast<double>(sum_) +
         DecompositionNoise(ctx_, 0, t_, scale_);
}

Guarantee BinaryTreeMechanism::guarantee() const {
  return {1.0, ErrorBound(params_.horizon, params_.epsilon, params_.xi)};
}

TreeCounterBank::TreeCounterBank(uint64_t counters, TreeParams params,
                                 NoiseContext ctx)
    : counters_(counters), params_(params), ctx_(ctx) {
  params_.Validate();
  if (counters < 1) throw ConfigError("counter bank needs >= 1 counter");
  scale_ = BinaryTreeMechanism::NodeScale(params_.horizon, params_.epsilon);
}

void TreeCounterBank::Advance() {
  if (t_ >= params_.horizon) {
    throw StateError("counter bank advanced beyond its horizon T=" +
                     std::to_string(params_.horizon));
  }
  ++t_;
}

void TreeCounterBank::AdvanceTo(int64_t t) {
  if (t < t_) throw StateError("counter bank clock cannot move backwards");
  if (t > params_.horizon) {
    throw StateError("counter bank advanced beyond its horizon T=" +
                     std::to_string(params_.horizon));
  }
  t_ = t;
}

void TreeCounterBank::Add(uint64_t counter, int64_t delta) {
  if (counter >= counters_) throw IndexError("counter index out of range");
  if (t_ == 0) throw StateError("Add before the first Advance");
  if (delta == 0) return;
  auto it = sums_.try_emplace(counter, 0).first;
  it->second += delta;
  if (it->second == 0) sums_.erase(it);
}

int64_t TreeCounterBank::exact(uint64_t counter) const {
  auto it = sums_.find(counter);
  return it == sums_.end() ? 0 : it->second;
}

double TreeCounterBank::Noise(uint64_t counter) const {
  return BinaryTreeMechanism::DecompositionNoise(ctx_, counter + 1, t_,
                                                 scale_);
}

double TreeCounterBank::Estimate(uint64_t counter) const {
  if (counter >= counters_) throw IndexError("counter index out of range");
  return static_cast<double>(exact(counter)) + Noise(counter);
}

void TreeCounterBank::Restore(int64_t t,
                              std::unordered_map<uint64_t, int64_t> sums) {
  if (t < 0 || t > params_.horizon) throw StateError("restored clock invalid");
  for (const auto& [c, v] : sums) {
    if (c >= counters_) throw ParseError("restored counter out of range");
    (void)v;
  }
  t_ = t;
  sums_ = std::move(sums);
}

void GroupingParams::Validate() const {
  if (horizon < 1) throw ConfigError("horizon T must be >= 1");
  CheckEpsilon(epsilon);
  CheckXi(xi);
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw ConfigError("eta must be positive");
  }
  if (base_threshold && !std::isfinite(*base_threshold)) {
    throw ConfigError("threshold override must be finite");
  }
}

double GroupingMechanism::BaseThreshold(const GroupingParams& p) {
  const double eps0 = p.epsilon / 2.0;
  return (1.0 / p.eta + 1.0) * (7.0 / eps0) *
         std::log(3.0 * static_cast<double>(p.horizon) / p.xi);
}

double GroupingMechanism::AdditiveBound(const GroupingParams& p) {
  const double eps0 = p.epsilon / 2.0;
  return (1.0 / p.eta + 4.0) * (7.0 / eps0) *
         std::log(3.0 * static_cast<double>(p.horizon) / p.xi);
}

double GroupingMechanism::GroupPrefixBound(const GroupingParams& p) {
  const double eps0 = p.epsilon / 2.0;
  const double log_term = std::log(3.0 * static_cast<double>(p.horizon) / p.xi);
  return (7.0 / (p.eta * eps0)) * log_term + (13.0 / eps0) * log_term;
}

GroupingMechanism::GroupingMechanism(GroupingParams params, NoiseContext ctx)
    : params_(params), ctx_(ctx) {
  params_.Validate();
  eps0_ = params_.epsilon / 2.0;
  base_ = params_.base_threshold ? *params_.base_threshold
                                 : BaseThreshold(params_);
  DrawThreshold();
}

void GroupingMechanism::DrawThreshold() {
  tau_ = base_ + ctx_.Laplace(2.0 / eps0_);
}

double GroupingMechanism::Feed(int64_t c) {
  if (c < 0) {
    throw DomainError("grouping mechanism needs non-negative inputs");
  }
  if (t_ >= params_.horizon) {
    throw StateError("grouping mechanism fed beyond its horizon T=" +
                     std::to_string(params_.horizon));
  }
  ++t_;
  group_sum_ += c;
  exact_prefix_ += c;
  const double nu = ctx_.Laplace(4.0 / eps0_);
  if (nu + static_cast<double>(group_sum_) >= tau_) {
    last_release_ = static_cast<double>(group_sum_) + ctx_.Laplace(1.0 / eps0_);
    last_closed_ = true;
    ++groups_closed_;
    group_sum_ = 0;
    DrawThreshold();
  } else {
    last_release_ = 0.0;
    last_closed_ = false;
  }
  released_prefix_ += last_release_;
  return released_prefix_;
}

Guarantee GroupingMechanism::guarantee() const {
  return {1.0 + params_.eta, AdditiveBound(params_)};
}

std::unique_ptr<SummingMechanism> MakeSummingMechanism(const SummingSpec& spec,
                                                       NoiseContext ctx) {
  if (spec.backend == SummingBackend::kTree) {
    return std::make_unique<BinaryTreeMechanism>(
        TreeParams{spec.horizon, spec.epsilon, spec.xi}, ctx);
  }
  return std::make_unique<GroupingMechanism>(
      GroupingParams{spec.horizon, spec.epsilon, spec.eta, spec.xi,
                     std::nullopt},
      ctx);
}

Guarantee SummingGuarantee(const SummingSpec& spec) {
  if (spec.backend == SummingBackend::kTree) {
    TreeParams{spec.horizon, spec.epsilon, spec.xi}.Validate();
    return {1.0, BinaryTreeMechanism::ErrorBound(spec.horizon, spec.epsilon,
                                                 spec.xi)};
  }
  GroupingParams p{spec.horizon, spec.epsilon, spec.eta, spec.xi,
                   std::nullopt};
  p.Validate();
  return {1.0 + p.eta, GroupingMechanism::AdditiveBound(p)};
}

}  // namespace dpstream
