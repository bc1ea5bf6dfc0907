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

#include "dpstream/moment.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "dpstream/errors.h"

namespace dpstream {
namespace {

constexpr uint64_t kLevelHashLabel = 0x6c766c;  // "lvl"
constexpr uint64_t kLowFreqLabel = 0x6c6f77;    // "low"
constexpr uint64_t kBaseLabel = 0x62617365;     // "base"
constexpr int64_t kMaxHeavyK = 100000;
constexpr double kMinGridSpacing = 1e-15;

}  // namespace

double SampleIntervalBase(NoiseContext& ctx, double eta, int64_t T, int c) {
  if (c < 2) throw ConfigError("grid exponent must be >= 2");
  if (!(eta > 0.0) || T < 1) throw ConfigError("eta and T must be positive");
  const double u = ctx.NextUniform();
  if (ctx.noise_off()) return 0.75;
  const double raw = 0.5 + 0.5 * u;
  const double spacing = std::pow(eta / static_cast<double>(T), c);
  if (spacing < kMinGridSpacing) return raw;
  const double steps = std::floor(0.5 / spacing);
  const double index = std::min(steps, std::round((raw - 0.5) / spacing));
  return std::clamp(0.5 + index * spacing, 0.5, 1.0);
}

double IntervalGeometry::Boundary(int64_t q) const {
  return base * std::pow(1.0 + eta, static_cast<double>(q));
}

IntervalGeometry IntervalGeometry::Build(double base, double eta,
                                         double threshold, int64_t T) {
  if (!(base > 0.0)) throw ConfigError("interval base must be positive");
  if (!(eta > 0.0)) throw ConfigError("eta must be positive");
  if (T < 1) throw ConfigError("T must be >= 1");
  IntervalGeometry g;
  g.base = base;
  g.eta = eta;
  const double log_step = std::log1p(eta);
  const double thr = std::max(threshold, 1.0);
  int64_t q = static_cast<int64_t>(std::floor(std::log(thr / base) / log_step));
  while (g.Boundary(q) > thr) --q;
  while (g.Boundary(q) <= thr) ++q;
  g.first = q;

  const double horizon = static_cast<double>(T);
  q = static_cast<int64_t>(std::ceil(std::log(horizon / base) / log_step)) - 1;
  while (g.Boundary(q) >= horizon) --q;
  while (g.Boundary(q + 1) < horizon) ++q;
  g.last = q;

  g.cutoff = std::min<int64_t>(
      T, static_cast<int64_t>(std::floor(g.Boundary(g.first))));
  g.cutoff = std::max<int64_t>(g.cutoff, 1);
  return g;
}

IntervalIndex IntervalGeometry::Locate(double f) const {
  if (count() == 0 || f <= Boundary(first)) return IntervalIndex::Below();
  if (f > Boundary(last + 1)) return IntervalIndex::Above();
  int64_t q = static_cast<int64_t>(
                  std::ceil(std::log(f / base) / std::log1p(eta))) - 1;
  q = std::clamp(q, first, last);
  while (q > first && Boundary(q) >= f) --q;
  while (q < last && Boundary(q + 1) < f) ++q;
  return IntervalIndex::Inside(q);
}

ContributingSet ContributingIntervals(const FrequencyTable& table,
                                      const IntervalGeometry& geometry,
                                      double p) {
  ContributingSet out;
  double low_mass = 0.0;
  std::map<int64_t, double> mass;
  for (const auto& [id, f] : table.counts()) {
    const double w = std::pow(static_cast<double>(f), p);
    out.total_mass += w;
    if (f <= geometry.cutoff) {
      low_mass += w;
      continue;
    }
    const IntervalIndex idx = geometry.Locate(static_cast<double>(f));
    if (idx.kind == IntervalIndex::Kind::kInside) mass[idx.q] += w;
  }
  const double share =
      geometry.eta * out.total_mass /
      static_cast<double>(std::max<int64_t>(1, geometry.count()));
  out.contributing_mass = low_mass;
  for (const auto& [q, w] : mass) {
    if (w >= share) {
      out.intervals.push_back(q);
      out.contributing_mass += w;
    }
  }
  return out;
}

DerivedTuple MomentLevelMapping(const GeometricLevelHash& level_hash,
                                StreamView stream) {
  const int L = level_hash.levels();
  DerivedTuple out(static_cast<size_t>(L + 1));
  for (DerivedStream& d : out) {
    d.kind = DerivedStream::Kind::kSymbols;
    d.values.assign(stream.size(), kEmptySymbol);
  }
  for (size_t t = 0; t < stream.size(); ++t) {
    if (!stream[t].is_element()) continue;
    const uint64_t a = stream[t].element();
    out[0].values[t] = static_cast<int64_t>(a);
    if (auto level = level_hash.Level(a)) {
      out[*level].values[t] = static_cast<int64_t>(a);
    }
  }
  return out;
}

void MomentConfig::Validate() const {
  if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError("p must be >= 0");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("epsilon must be positive and finite");
  }
  if (!(eta > 0.0 && eta < 0.5)) throw ConfigError("eta must lie in (0, 0.5)");
  if (!(xi > 0.0 && xi < 0.5)) throw ConfigError("xi must lie in (0, 0.5)");
  if (n < 1 || T < 1) throw ConfigError("n and T must be >= 1");
  if (beta_c < 2) throw ConfigError("beta grid exponent must be >= 2");
  if (max_heavy_k < 0) throw ConfigError("max_heavy_k must be >= 0");
  if (!(low_freq_eta > 0.0 && low_freq_eta < 0.5)) {
    throw ConfigError("low_freq_eta must lie in (0, 0.5)");
  }
  if (tau && !(*tau >= 0.0)) throw ConfigError("tau must be >= 0");
}

MomentPlan PlanMoment(const MomentConfig& config) {
  config.Validate();
  MomentPlan plan;
  plan.config = config;
  const double T = static_cast<double>(config.T);
  const double eta = config.eta;
  plan.theory_copies = FiftyLogCopies(std::log(3.0 * T / config.xi));
  plan.copies = config.caps.Copies(plan.theory_copies);
  const double theory = static_cast<double>(plan.theory_copies);
  plan.sub_epsilon = config.epsilon / (4.0 * static_cast<double>(plan.copies));

  plan.levels = std::max(1, CeilLog2(config.n));
  const double levels1 = plan.levels + 1.0;
  const double log4t = std::log2(4.0 * T);
  plan.lambda =
      RoundUpEvenAtLeast4(2.0 * std::log2(1000.0 * levels1 * log4t / eta));
  plan.theory_heavy_k = (log4t / eta) * 100.0 * levels1 *
                        (32.0 * plan.lambda / (eta * eta * eta)) *
                        std::pow(1.0 + eta, config.p);
  const double want = std::ceil(plan.theory_heavy_k - 1e-9);
  const double capped =
      config.max_heavy_k > 0
          ? std::min(want, static_cast<double>(config.max_heavy_k))
          : want;
  if (capped > static_cast<double>(kMaxHeavyK)) {
    throw ResourceError(
        "heavy-hitter parameter k = " + std::to_string(capped) +
        " exceeds the supported 100000; set a heavy-k cap");
  }
  plan.heavy_k = static_cast<int64_t>(capped);
  plan.heavy_set_cap = std::max<int64_t>(
      1, static_cast<int64_t>(std::floor(
             std::pow((1.0 + eta) / (1.0 - eta), config.p) *
                 static_cast<double>(plan.heavy_k) +
             1e-9)));
  plan.precision =
      eta / (10000.0 * levels1 * static_cast<double>(plan.heavy_set_cap));

  plan.heavy_xi = config.xi / (4.0 * theory * levels1);
  plan.low_freq_xi = config.xi / (3.0 * theory);
  HHConfig hc;
  hc.p = config.p;
  hc.k = plan.heavy_k;
  hc.eta = plan.precision;
  hc.epsilon = plan.sub_epsilon;
  hc.xi = plan.heavy_xi;
  hc.n = config.n;
  hc.T = config.T;
  hc.exact_backends = config.exact_backends;
  hc.caps = config.caps;
  plan.heavy = PlanHeavyHitters(hc);
  plan.tau = config.tau ? *config.tau : plan.heavy.tau;

  plan.budget = MechanismBudget(config.epsilon, config.xi);
  plan.budget.ChargeEach("copy", plan.copies, 4.0 * plan.sub_epsilon,
                         levels1 * plan.heavy_xi + plan.low_freq_xi);
  plan.budget.Charge("median", 0.0, config.xi / 3.0);
  return plan;
}

LowFreqConfig MomentPlan::LowFreqFor(int64_t cutoff) const {
  LowFreqConfig lc;
  lc.k = static_cast<int>(std::max<int64_t>(1, cutoff));
  lc.epsilon = sub_epsilon;
  lc.eta = config.low_freq_eta;
  lc.xi = low_freq_xi;
  lc.n = config.n;
  lc.T = config.T;
  lc.small_universe_limit = config.low_freq_small_limit;
  lc.caps = config.caps;
  return lc;
}

MomentCopy::MomentCopy(const MomentPlan& plan, NoiseContext ctx)
    : plan_(plan) {
  NoiseContext base_ctx = ctx.Derive(kBaseLabel);
  const double base = SampleIntervalBase(base_ctx, plan_.config.eta,
                                         plan_.config.T, plan_.config.beta_c);
  geometry_ = IntervalGeometry::Build(base, plan_.config.eta, plan_.tau,
                                      plan_.config.T);
  NoiseContext level_ctx = ctx.Derive(kLevelHashLabel);
  level_hash_ = GeometricLevelHash(plan_.levels, plan_.lambda, level_ctx);
  for (int i = 0; i <= plan_.levels; ++i) {
    heavy_.push_back(std::make_unique<HeavyHitterEstimator>(
        plan_.heavy, ctx.Derive(static_cast<uint64_t>(i))));
  }
  low_ = MakeLowFreqEstimator(PlanLowFreq(plan_.LowFreqFor(geometry_.cutoff)),
                              ctx.Derive(kLowFreqLabel));
}

void MomentCopy::Observe(const StreamEvent& event) {
  if (event.is_integer()) throw ModeError("moments need element events");
  std::optional<int> level;
  if (event.is_element()) level = level_hash_.Level(event.element());
  heavy_[0]->Observe(event);
  for (int i = 1; i <= plan_.levels; ++i) {
    heavy_[i]->Observe(level && *level == i ? event : StreamEvent::Empty());
  }
  low_->Observe(event);
  ++t_;
}

std::vector<double> MomentCopy::IntervalCounts() const {
  const int64_t count = geometry_.count();
  std::vector<double> z(static_cast<size_t>(count), 0.0);
  if (count == 0) return z;
  const double eta = plan_.config.eta;
  const double qualify = 8.0 * plan_.lambda / (eta * eta);
  std::vector<int64_t> members(static_cast<size_t>(count));
  for (int i = 0; i <= plan_.levels; ++i) {
    std::fill(members.begin(), members.end(), 0);
    for (const ReportedItem& item : heavy_[i]->Report()) {
      const IntervalIndex idx = geometry_.Locate(item.f_hat);
      if (idx.kind == IntervalIndex::Kind::kInside) {
        ++members[static_cast<size_t>(idx.q - geometry_.first)];
      }
    }
    for (int64_t j = 0; j < count; ++j) {
      const double m = static_cast<double>(members[j]);
      if (i == 0 || m >= qualify) {
        z[j] = std::max(z[j], std::ldexp(m, i));
      }
    }
  }
  return z;
}

double MomentCopy::HighPart() const {
  const std::vector<double> z = IntervalCounts();
  double sum = 0.0;
  for (size_t j = 0; j < z.size(); ++j) {
    if (z[j] == 0.0) continue;
    const int64_t q = geometry_.first + static_cast<int64_t>(j);
    sum += z[j] * std::pow(geometry_.Boundary(q), plan_.config.p);
  }
  return sum;
}

double MomentCopy::LowPart() const {
  const std::vector<double> s = low_->Estimates();
  double sum = 0.0;
  for (size_t l = 0; l < s.size(); ++l) {
    const double v = plan_.config.clamp ? std::max(0.0, s[l]) : s[l];
    sum += v * std::pow(static_cast<double>(l + 1), plan_.config.p);
  }
  return sum;
}

double MomentCopy::Estimate() const { return LowPart() + HighPart(); }

std::unique_ptr<ContinualEstimator> MakeMomentEstimator(const MomentPlan& plan,
                                                        NoiseContext ctx) {
  std::vector<std::unique_ptr<ContinualEstimator>> copies;
  copies.reserve(static_cast<size_t>(plan.copies));
  for (int64_t i = 0; i < plan.copies; ++i) {
    copies.push_back(std::make_unique<MomentCopy>(
        plan, ctx.Derive(static_cast<uint64_t>(i))));
  }
  return std::make_unique<MedianOfCopies>(std::move(copies));
}

}  // namespace dpstream
