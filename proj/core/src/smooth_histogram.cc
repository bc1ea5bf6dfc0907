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

#include "dpstream/smooth_histogram.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dpstream/errors.h"

namespace dpstream {

void SmoothnessParams::Validate() const {
  if (!(beta > 0.0 && beta <= zeta && zeta < 1.0)) {
    throw ConfigError("smoothness needs 0 < beta <= zeta < 1");
  }
}

SmoothnessParams SmoothnessParams::ForMoment(double p, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("eta must lie in (0, 1)");
  if (!(p >= 0.0)) throw ConfigError("p must be >= 0");
  if (p > 1.0) return {eta, std::pow(eta / p, p)};
  return {eta, eta};
}

ShiftedEstimate ShiftToRelative(double raw, double alpha, double gamma) {
  if (!(alpha > 1.0)) {
    throw DomainError("a relative factor above 1 is needed for a finite shift");
  }
  if (!(gamma >= 0.0)) throw DomainError("gamma must be >= 0");
  return {raw, alpha * gamma / (alpha - 1.0)};
}

SmoothHistogram::SmoothHistogram(SmoothHistogramParams params,
                                 EstimatorFactory factory, NoiseContext ctx)
    : params_(params), factory_(std::move(factory)), ctx_(ctx) {
  if (params_.window < 1) throw ConfigError("window must be >= 1");
  params_.smoothness.Validate();
  if (!(params_.shift >= 0.0)) throw ConfigError("shift must be >= 0");
  if (params_.max_instances != 0 && params_.max_instances < 3) {
    throw ConfigError("instance cap must be 0 or >= 3");
  }
  if (!factory_) throw ConfigError("an estimator factory is required");
}

void SmoothHistogram::Observe(const StreamEvent& event) {
  ++t_;
  entries_.push_back(
      {t_, factory_(ctx_.Derive(static_cast<uint64_t>(t_))), 0.0});
  max_feeds_ = std::max(max_feeds_, entries_.size());
  for (HistogramEntry& e : entries_) {
    e.estimator->Observe(event);
    e.last_output = e.estimator->Estimate() + params_.shift;
  }
  Prune();
  Expire();
  EnforceCap();
  max_retained_ = std::max(max_retained_, entries_.size());
}

void SmoothHistogram::Prune() {
  const double keep = 1.0 - params_.smoothness.beta;
  size_t i = 0;
  while (i + 2 < entries_.size()) {
    if (keep * entries_[i].last_output <= entries_[i + 2].last_output) {
      entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(i + 1));
    } else {
      ++i;
    }
  }
}

void SmoothHistogram::Expire() {
  // Keep the newest entry starting at or before t - W (the straddler).
  const int64_t edge = t_ - params_.window;
  size_t straddler = 0;
  bool found = false;
  for (size_t i = 0; i < entries_.size() && entries_[i].start <= edge; ++i) {
    straddler = i;
    found = true;
  }
  if (found && straddler > 0) {
    entries_.erase(entries_.begin(),
                   entries_.begin() + static_cast<std::ptrdiff_t>(straddler));
  }
}

void SmoothHistogram::EnforceCap() {
  if (params_.max_instances == 0) return;
  const size_t cap = static_cast<size_t>(params_.max_instances);
  while (entries_.size() > cap) {
    // Remove the interior entry whose neighbours are closest in value.
    size_t best = 1;
    double best_ratio = -std::numeric_limits<double>::infinity();
    for (size_t i = 1; i + 1 < entries_.size(); ++i) {
      const double older = entries_[i - 1].last_output;
      const double newer = entries_[i + 1].last_output;
      const double ratio = older > 0.0 ? newer / older : newer - older;
      if (ratio > best_ratio) {
        best_ratio = ratio;
        best = i;
      }
    }
    entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(best));
    ++forced_removals_;
  }
}

double SmoothHistogram::Estimate() const {
  if (entries_.empty()) return 0.0;
  const int64_t first_in_window = t_ - params_.window + 1;
  for (const HistogramEntry& e : entries_) {
    if (e.start >= first_in_window) return e.last_output - params_.shift;
  }
  return entries_.back().last_output - params_.shift;
}

int64_t InstanceBound(int64_t T, double beta, double c) {
  if (T < 1) throw ConfigError("T must be >= 1");
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("beta must lie in (0, 1)");
  const double logt = std::max(1.0, std::log2(static_cast<double>(T)));
  return std::max<int64_t>(3, static_cast<int64_t>(std::ceil(c * logt / beta)));
}

void WindowConfig::Validate() const {
  if (window < 1) throw ConfigError("window must be >= 1");
  if (T < 1) throw ConfigError("T must be >= 1");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("epsilon must be positive and finite");
  }
  if (!(xi > 0.0 && xi < 0.5)) throw ConfigError("xi must lie in (0, 0.5)");
  if (!(eta > 0.0 && eta < 0.5)) throw ConfigError("eta must lie in (0, 0.5)");
  smoothness.Validate();
  if (!(instance_constant > 0.0)) {
    throw ConfigError("instance constant must be positive");
  }
  if (!(shift_cap >= 0.0)) throw ConfigError("shift cap must be >= 0");
}

WindowPlan PlanWindow(
    const WindowConfig& config,
    const std::function<Guarantee(double epsilon, double xi)>& inner_guarantee) {
  config.Validate();
  WindowPlan plan;
  plan.config = config;
  plan.max_instances = InstanceBound(config.T, config.smoothness.beta,
                                     config.instance_constant);
  plan.instance_epsilon =
      config.epsilon / static_cast<double>(plan.max_instances);
  plan.instance_xi = config.xi / static_cast<double>(config.T);
  plan.inner = inner_guarantee(plan.instance_epsilon, plan.instance_xi);
  plan.alpha = std::max(plan.inner.alpha, 1.0 + config.eta);
  const double T = static_cast<double>(config.T);
  const double cap = config.shift_cap > 0.0 ? config.shift_cap : T * T * T;
  plan.shift = std::min(cap, ShiftToRelative(0.0, plan.alpha,
                                             plan.inner.gamma).shift);
  plan.budget = MechanismBudget(config.epsilon, config.xi);
  plan.budget.ChargeEach("live_instance", plan.max_instances,
                         plan.instance_epsilon, 0.0);
  plan.budget.Charge("instance_failures", 0.0, config.xi);
  return plan;
}

void ExactCountEstimator::Observe(const StreamEvent& event) {
  sum_ += event.SumValue();
  ++t_;
}

void SummingEstimator::Observe(const StreamEvent& event) {
  inner_->Feed(event.SumValue());
}

}  // namespace dpstream
