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

// Sliding-window release through a smooth histogram: one inner estimator is
// started per timestamp and an instance is dropped once its neighbours
// bracket it tightly enough, so only O(log T / beta) suffixes stay alive.

#ifndef DPSTREAM_SMOOTH_HISTOGRAM_H_
#define DPSTREAM_SMOOTH_HISTOGRAM_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>

#include "dpstream/budget.h"
#include "dpstream/estimator.h"
#include "dpstream/random.h"
#include "dpstream/summing.h"

namespace dpstream {

// g is (zeta, beta)-smooth when (1-beta) g(A) <= g(B) for a suffix B of A
// implies (1-zeta) g(A C) <= g(B C) for every continuation C.
struct SmoothnessParams {
  double zeta = 0.1;
  double beta = 0.1;

  void Validate() const;
  // l_p moments: p > 1 gives (eta, (eta/p)^p); 0 <= p <= 1 gives
  // (eta, eta).
  static SmoothnessParams ForMoment(double p, double eta);
};

// raw + shift is an alpha-approximation of g + shift whenever raw is an
// (alpha, gamma)-approximation of g and shift >= alpha gamma / (alpha - 1).
struct ShiftedEstimate {
  double raw = 0;
  double shift = 0;

  double value() const { return raw + shift; }
};

ShiftedEstimate ShiftToRelative(double raw, double alpha, double gamma);

using EstimatorFactory =
    std::function<std::unique_ptr<ContinualEstimator>(NoiseContext)>;

struct HistogramEntry {
  int64_t start = 0;
  std::unique_ptr<ContinualEstimator> estimator;
  double last_output = 0;  // shifted
};

struct SmoothHistogramParams {
  int64_t window = 1;
  SmoothnessParams smoothness;
  double shift = 0;
  // Hard bound on retained instances; 0 means none. Exceeding it removes
  // interior instances that are closest to being prunable.
  int64_t max_instances = 0;
};

class SmoothHistogram final : public ContinualEstimator {
 public:
  SmoothHistogram(SmoothHistogramParams params, EstimatorFactory factory,
                  NoiseContext ctx);

  void Observe(const StreamEvent& event) override;
  // Output of the oldest instance starting inside the window, unshifted.
  double Estimate() const override;
  int64_t time() const override { return t_; }

  size_t retained() const { return entries_.size(); }
  size_t max_retained() const { return max_retained_; }
  // Largest number of instances any single event was fed to.
  size_t max_feeds_per_event() const { return max_feeds_; }
  int64_t forced_removals() const { return forced_removals_; }
  const std::deque<HistogramEntry>& entries() const { return entries_; }
  const SmoothHistogramParams& params() const { return params_; }

 private:
  void Prune();
  void Expire();
  void EnforceCap();

  SmoothHistogramParams params_;
  EstimatorFactory factory_;
  NoiseContext ctx_;
  std::deque<HistogramEntry> entries_;
  int64_t t_ = 0;
  size_t max_retained_ = 0;
  size_t max_feeds_ = 0;
  int64_t forced_removals_ = 0;
};

// ceil(c log2(T) / beta) with the constant below. The pruning rule leaves
// consecutive retained outputs at least a (1 - beta) factor apart every
// second step, so about 2 ln(range) / beta instances survive; c = 2 covers
// this for any positive output range up to poly(T).
inline constexpr double kInstanceConstant = 2.0;
int64_t InstanceBound(int64_t T, double beta,
                      double c = kInstanceConstant);

struct WindowConfig {
  int64_t window = 1;
  int64_t T = 1;
  double epsilon = 1.0;
  double xi = 0.05;
  // Relative slack used to turn additive error into relative error.
  double eta = 0.1;
  SmoothnessParams smoothness;
  double instance_constant = kInstanceConstant;
  // Upper limit on the shift; 0 means T^3.
  double shift_cap = 0;

  void Validate() const;
};

struct WindowPlan {
  WindowConfig config;
  int64_t max_instances = 1;
  double instance_epsilon = 0;  // epsilon / max_instances
  double instance_xi = 0;       // xi / T
  Guarantee inner;
  double alpha = 1;             // max(inner alpha, 1 + eta)
  double shift = 0;
  MechanismBudget budget{1.0, 0.0};

  SmoothHistogramParams histogram() const {
    return {config.window, config.smoothness, shift, max_instances};
  }
};

// `inner_guarantee` maps the per-instance (epsilon, xi) to the inner
// estimator's (alpha, gamma).
WindowPlan PlanWindow(
    const WindowConfig& config,
    const std::function<Guarantee(double epsilon, double xi)>& inner_guarantee);

// Counts non-empty events (integer events contribute their value).
class ExactCountEstimator final : public ContinualEstimator {
 public:
  void Observe(const StreamEvent& event) override;
  double Estimate() const override { return static_cast<double>(sum_); }
  int64_t time() const override { return t_; }

 private:
  int64_t sum_ = 0;
  int64_t t_ = 0;
};

// Adapts a summing mechanism fed with the event's summing value.
class SummingEstimator final : public ContinualEstimator {
 public:
  explicit SummingEstimator(std::unique_ptr<SummingMechanism> inner)
      : inner_(std::move(inner)) {}

  void Observe(const StreamEvent& event) override;
  double Estimate() const override { return inner_->Estimate(); }
  int64_t time() const override { return inner_->time(); }

 private:
  std::unique_ptr<SummingMechanism> inner_;
};

}  // namespace dpstream

#endif  // DPSTREAM_SMOOTH_HISTOGRAM_H_
