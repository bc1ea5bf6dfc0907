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

#include "dpstream/heavy_hitters.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "dpstream/errors.h"
#include "dpstream/summing.h"

namespace dpstream {

namespace {

constexpr double kF2Eta = 0.01;
constexpr uint64_t kHashLabel = 0x68617368ULL;

}  // namespace

void HHConfig::Validate() const {
  if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError("p must be >= 0");
  if (k < 1) throw ConfigError("k must be >= 1");
  if (k > 100000) throw ConfigError("k above 10^5 is not supported");
  if (!(eta > 0.0 && eta < 0.5)) throw ConfigError("eta must lie in (0, 0.5)");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("epsilon must be positive and finite");
  }
  if (!(xi > 0.0 && xi < 0.5)) throw ConfigError("xi must lie in (0, 0.5)");
  if (n < 1 || T < 1) throw ConfigError("n and T must be >= 1");
  if (!(f2_divisor > 0.0) || !(gamma_factor >= 0.0)) {
    throw ConfigError("threshold constants must be positive");
  }
  if (!(tau_exponent > 0.0)) throw ConfigError("tau exponent must be > 0");
}

double HHParams::RecallFrequency() const {
  return 4.0 * std::sqrt(gamma1 / (phi * static_cast<double>(k)) +
                         512.0 * gamma2 * gamma2 / (eta * eta));
}

HHPlan PlanHeavyHitters(const HHConfig& config) {
  config.Validate();
  HHPlan plan;
  plan.config = config;
  const double T = static_cast<double>(config.T);
  const double n = static_cast<double>(config.n);
  const double k = static_cast<double>(config.k);
  plan.theory_copies =
      FiftyLogCopies(std::log(2.0 * T / config.xi) + std::log(n));
  plan.copies = config.caps.Copies(plan.theory_copies);

  HHParams& hp = plan.params;
  hp.p = config.p;
  hp.k = config.k;
  hp.eta = config.eta;
  hp.phi = config.p > 2.0 ? std::max(1.0, std::pow(n, 1.0 - 2.0 / config.p))
                          : 1.0;
  hp.substreams = static_cast<uint64_t>(10 * config.k * config.k);
  hp.f2_divisor = config.f2_divisor;
  hp.gamma_factor = config.gamma_factor;
  hp.report_cap = static_cast<size_t>(std::floor(
      std::pow((1.0 + config.eta) / (1.0 - config.eta), config.p) * k + 1e-9));

  plan.subroutine_epsilon =
      config.epsilon / (4.0 * static_cast<double>(plan.copies));
  plan.subroutine_xi =
      config.xi / (4.0 * static_cast<double>(plan.theory_copies) *
                   static_cast<double>(hp.substreams));
  const double eta_pq = (config.eta / 16.0) / (10.0 * std::sqrt(hp.phi * k));
  hp.point_query = PlanL2({plan.subroutine_epsilon, eta_pq, plan.subroutine_xi,
                           config.n, config.T, config.caps});
  hp.f2 = PlanL2({plan.subroutine_epsilon, kF2Eta, plan.subroutine_xi,
                  config.n, config.T, config.caps});
  if (!config.exact_backends) {
    hp.gamma2 = BinaryTreeMechanism::ErrorBound(
        config.T, hp.point_query.tree_epsilon, hp.point_query.tree_xi);
    const double g = BinaryTreeMechanism::ErrorBound(
        config.T, hp.f2.tree_epsilon, hp.f2.tree_xi);
    hp.gamma1 = 4.0 * static_cast<double>(hp.f2.buckets) * g * g / kF2Eta;
  }
  plan.tau = (1.0 / (config.epsilon * config.eta)) *
             std::pow(std::log(T * k * n / (config.xi * config.eta)),
                      config.tau_exponent);

  plan.budget = MechanismBudget(config.epsilon, config.xi);
  plan.budget.ChargeEach("copy", plan.copies, 4.0 * plan.subroutine_epsilon,
                         2.0 * static_cast<double>(hp.substreams) *
                             plan.subroutine_xi);
  plan.budget.Charge("union", 0.0, config.xi / 2.0);
  return plan;
}

DerivedTuple SubstreamMapping(const PolyHash& substream_hash,
                              StreamView stream) {
  DerivedTuple out(static_cast<size_t>(substream_hash.range()));
  for (DerivedStream& d : out) {
    d.kind = DerivedStream::Kind::kSymbols;
    d.values.assign(stream.size(), kEmptySymbol);
  }
  for (size_t t = 0; t < stream.size(); ++t) {
    if (!stream[t].is_element()) continue;
    const uint64_t a = stream[t].element();
    out[substream_hash(a)].values[t] = static_cast<int64_t>(a);
  }
  return out;
}

namespace {

PolyHash DrawSubstreamHash(uint64_t m, NoiseContext ctx) {
  NoiseContext hash_ctx = ctx.Derive(kHashLabel);
  return PolyHash(2, m, hash_ctx);
}

}  // namespace

HeavyHitters::HeavyHitters(const HHParams& params, NoiseContext ctx)
    : HeavyHitters(params, DrawSubstreamHash(params.substreams, ctx), ctx) {}

HeavyHitters::HeavyHitters(const HHParams& params, PolyHash substream_hash,
                           NoiseContext ctx)
    : params_(params), hash_(std::move(substream_hash)), ctx_(ctx) {
  if (hash_.range() != params_.substreams) {
    throw ConfigError("substream hash range differs from the parameters");
  }
}

HeavyHitters::Substream& HeavyHitters::Get(uint64_t index) {
  auto it = subs_.find(index);
  if (it == subs_.end()) {
    auto sub = std::unique_ptr<Substream>(new Substream{
        L2Estimator(params_.point_query, ctx_.Derive(2 * index + 1)),
        L2Estimator(params_.f2, ctx_.Derive(2 * index + 2))});
    it = subs_.emplace(index, std::move(sub)).first;
  }
  return *it->second;
}

bool HeavyHitters::Passes(uint64_t a, double& f_hat) {
  Substream& sub = Get(hash_(a));
  sub.point_query.AdvanceTo(t_);
  f_hat = std::max(0.0, sub.point_query.PointQuery(a));
  const double lhs = f_hat * f_hat;
  const double fixed = params_.FixedThreshold();
  // The F2 term is non-negative, so failing the fixed part decides the test
  // without reading the (expensive) substream F2.
  if (lhs < fixed) return false;
  sub.f2.AdvanceTo(t_);
  const double f2 = sub.f2.F2();
  const double rhs = (f2 + params_.gamma1) /
                         (params_.f2_divisor * params_.phi *
                          static_cast<double>(params_.k)) +
                     fixed;
  return lhs >= rhs;
}

void HeavyHitters::Observe(const StreamEvent& event) {
  if (event.is_integer()) throw ModeError("heavy hitters need element events");
  ++t_;
  std::vector<uint64_t> tests;
  tests.reserve(candidates_.size() + 1);
  for (const auto& [a, f] : candidates_) tests.push_back(a);
  if (event.is_element()) {
    const uint64_t a = event.element();
    Substream& sub = Get(hash_(a));
    sub.point_query.AdvanceTo(t_ - 1);
    sub.f2.AdvanceTo(t_ - 1);
    sub.point_query.Observe(event);
    sub.f2.Observe(event);
    if (candidates_.count(a) == 0) tests.push_back(a);
  }
  std::map<uint64_t, double> next;
  for (uint64_t a : tests) {
    double f_hat = 0.0;
    if (Passes(a, f_hat)) next.emplace(a, f_hat);
  }
  candidates_ = std::move(next);

  reported_.clear();
  for (const auto& [a, f] : candidates_) reported_.push_back({a, f});
  std::sort(reported_.begin(), reported_.end(),
            [](const ReportedItem& x, const ReportedItem& y) {
              if (x.f_hat != y.f_hat) return x.f_hat > y.f_hat;
              return x.element < y.element;
            });
  if (reported_.size() > params_.report_cap) {
    reported_.resize(params_.report_cap);
  }
}

HeavyHitterEstimator::HeavyHitterEstimator(const HHPlan& plan,
                                           NoiseContext ctx) {
  copies_.reserve(static_cast<size_t>(plan.copies));
  for (int64_t i = 0; i < plan.copies; ++i) {
    copies_.push_back(std::make_unique<HeavyHitters>(
        plan.params, ctx.Derive(static_cast<uint64_t>(i))));
  }
}

void HeavyHitterEstimator::Observe(const StreamEvent& event) {
  for (auto& c : copies_) c->Observe(event);
}

std::vector<ReportedItem> HeavyHitterEstimator::Report() const {
  std::map<uint64_t, double> merged;
  for (const auto& c : copies_) {
    for (const ReportedItem& item : c->reported()) {
      merged.emplace(item.element, item.f_hat);
    }
  }
  std::vector<ReportedItem> out;
  out.reserve(merged.size());
  for (const auto& [a, f] : merged) out.push_back({a, f});
  return out;
}

}  // namespace dpstream
