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

#include "harness.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "dpstream/countsketch.h"
#include "dpstream/distinct.h"
#include "dpstream/errors.h"
#include "dpstream/heavy_hitters.h"
#include "dpstream/low_freq.h"
#include "dpstream/moment.h"
#include "dpstream/random.h"
#include "dpstream/smooth_histogram.h"
#include "json.hpp"

namespace dpstream::harness {

std::string FormatNumber(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error("number formatting failed");
  return std::string(buf, end);
}

std::string FormatNumber(int64_t value) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error("number formatting failed");
  return std::string(buf, end);
}

void CsvTable::Write(std::ostream& out) const {
  auto line = [&out](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
  };
  line(columns);
  for (const auto& r : rows) line(r);
}

std::string CsvTable::ToString() const {
  std::ostringstream out;
  Write(out);
  return out.str();
}

bool IsReported(int64_t t, int64_t length, int64_t every) {
  if (every <= 1) return true;
  return t % every == 0 || t == length;
}

namespace {

// Exact statistic over a multiset of events, with removal for windows.
class ExactTracker {
 public:
  enum class Kind { kSum, kDistinct, kMoment };

  ExactTracker(Kind kind, double p) : kind_(kind), p_(p) {}

  void Add(const StreamEvent& e) {
    if (kind_ == Kind::kSum) {
      sum_ += e.SumValue();
      return;
    }
    if (!e.is_element()) return;
    int64_t& f = freq_[e.element()];
    moment_ += Power(f + 1) - Power(f);
    ++f;
  }

  void Remove(const StreamEvent& e) {
    if (kind_ == Kind::kSum) {
      sum_ -= e.SumValue();
      return;
    }
    if (!e.is_element()) return;
    auto it = freq_.find(e.element());
    if (it == freq_.end()) return;
    moment_ += Power(it->second - 1) - Power(it->second);
    if (--it->second == 0) freq_.erase(it);
  }

  double Value() const {
    switch (kind_) {
      case Kind::kSum:
        return static_cast<double>(sum_);
      case Kind::kDistinct:
        return static_cast<double>(freq_.size());
      case Kind::kMoment:
        // p = 0 is the distinct count; integral p keeps the running sum
        // exact as long as it fits in a double mantissa.
        return p_ == 0.0 ? static_cast<double>(freq_.size()) : moment_;
    }
    return 0.0;
  }

 private:
  double Power(int64_t f) const {
    if (f <= 0) return 0.0;
    return std::pow(static_cast<double>(f), p_);
  }

  Kind kind_;
  double p_;
  int64_t sum_ = 0;
  double moment_ = 0.0;
  std::unordered_map<uint64_t, int64_t> freq_;
};

ExactTracker::Kind TrackerFor(std::string_view stat) {
  if (stat == "sum") return ExactTracker::Kind::kSum;
  if (stat == "distinct") return ExactTracker::Kind::kDistinct;
  if (stat == "f2" || stat == "moment") return ExactTracker::Kind::kMoment;
  throw ConfigError("unknown statistic '" + std::string(stat) + "'");
}

double TrackerPower(std::string_view stat, double p) {
  return stat == "f2" ? 2.0 : p;
}

NoiseContext MakeContext(const RunOptions& o) {
  return NoiseContext(o.seed, o.noise_off);
}

DistinctConfig DistinctFor(const RunOptions& o, double epsilon, double xi) {
  DistinctConfig c;
  c.epsilon = epsilon;
  c.eta = o.eta;
  c.xi = xi;
  c.n = o.n;
  c.T = o.T;
  c.variant = o.variant;
  c.caps = o.caps();
  return c;
}

L2Config L2For(const RunOptions& o, double epsilon, double xi) {
  return L2Config{epsilon, o.eta, xi, o.n, o.T, o.caps()};
}

MomentConfig MomentFor(const RunOptions& o, double epsilon, double xi) {
  MomentConfig c;
  c.p = o.p;
  c.epsilon = epsilon;
  c.eta = o.eta;
  c.xi = xi;
  c.n = o.n;
  c.T = o.T;
  c.beta_c = o.beta_c;
  c.max_heavy_k = o.max_heavy_k;
  c.exact_backends = o.noise_off;
  c.caps = o.caps();
  return c;
}

SmoothnessParams SmoothnessFor(const RunOptions& o) {
  if (o.stat == "sum" || o.stat == "distinct") {
    return SmoothnessParams::ForMoment(1.0, o.eta);
  }
  if (o.stat == "f2") return SmoothnessParams::ForMoment(2.0, o.eta);
  return SmoothnessParams::ForMoment(o.p, o.eta);
}

// Additive error of the moment estimate's low-frequency part: every count
// up to the largest possible cutoff contributes gamma l^p.
double MomentAdditive(const MomentPlan& plan) {
  const double T = static_cast<double>(plan.config.T);
  const double cutoff = std::min(T, std::ceil(2.0 * std::max(plan.tau, 1.0)));
  const double counter_eps = plan.sub_epsilon / (8.0 * cutoff);
  const double counter_xi = plan.low_freq_xi / cutoff;
  const double gamma = BinaryTreeMechanism::ErrorBound(
      plan.config.T, counter_eps, counter_xi);
  double weight = 0.0;
  for (int64_t l = 1; l <= static_cast<int64_t>(cutoff); ++l) {
    weight += std::pow(static_cast<double>(l), plan.config.p);
  }
  return gamma * weight;
}

HHConfig HHFor(const RunOptions& o) {
  HHConfig c;
  c.p = o.p;
  c.k = o.k;
  c.eta = o.eta;
  c.epsilon = o.epsilon;
  c.xi = o.xi;
  c.n = o.n;
  c.T = o.T;
  c.tau_exponent = o.tau_exponent;
  c.exact_backends = o.noise_off;
  c.caps = o.caps();
  return c;
}

LowFreqConfig LowFreqFor(const RunOptions& o) {
  if (o.k < 1 || o.k > 1'000'000) throw ConfigError("k must lie in [1, 1e6]");
  LowFreqConfig c;
  c.k = static_cast<int>(o.k);
  c.epsilon = o.epsilon;
  c.eta = o.eta;
  c.xi = o.xi;
  c.n = o.n;
  c.T = o.T;
  c.caps = o.caps();
  return c;
}

// Substreams a heavy-hitter copy can touch: bounded by the hash range, the
// universe and the number of events.
double TouchedSubstreams(const HHPlan& p) {
  return std::min({static_cast<double>(p.params.substreams),
                   static_cast<double>(p.config.n),
                   static_cast<double>(p.config.T)});
}

Footprint HHFootprint(const HHPlan& p) {
  const double per_sub = static_cast<double>(p.params.point_query.copies +
                                             p.params.f2.copies);
  const double copies = static_cast<double>(p.copies);
  return {copies * per_sub, copies * TouchedSubstreams(p) * per_sub};
}

Footprint MomentFootprint(const MomentPlan& p) {
  const Footprint hh = HHFootprint(p.heavy);
  const double scale = static_cast<double>(p.copies) * (p.levels + 1.0);
  return {scale * hh.work_per_event, scale * hh.sketches};
}

struct WindowWiring {
  WindowPlan plan;
  EstimatorFactory factory;
  Footprint inner{1.0, 0.0};  // per live instance
};

WindowWiring WireWindow(const RunOptions& o) {
  WindowConfig wc;
  wc.window = o.window;
  wc.T = o.T;
  wc.epsilon = o.epsilon;
  wc.xi = o.xi;
  wc.eta = o.eta;
  wc.smoothness = SmoothnessFor(o);
  WindowWiring w;
  const std::string stat = o.stat;
  if (stat == "sum") {
    auto spec = std::make_shared<SummingSpec>();
    w.plan = PlanWindow(wc, [&](double eps, double xi) {
      *spec = SummingSpec{o.variant, o.T, eps, o.eta, xi};
      return SummingGuarantee(*spec);
    });
    w.factory = [spec](NoiseContext ctx) {
      return std::make_unique<SummingEstimator>(
          MakeSummingMechanism(*spec, ctx));
    };
  } else if (stat == "distinct") {
    auto plan = std::make_shared<DistinctPlan>();
    w.plan = PlanWindow(wc, [&](double eps, double xi) {
      *plan = PlanDistinct(DistinctFor(o, eps, xi));
      return DistinctGuarantee(*plan);
    });
    w.factory = [plan](NoiseContext ctx) {
      return MakeDistinctEstimator(*plan, ctx);
    };
    w.inner.work_per_event =
        plan->small ? 1.0
                    : static_cast<double>(plan->copies) *
                          plan->level_params.levels;
  } else if (stat == "f2") {
    auto plan = std::make_shared<L2Plan>();
    w.plan = PlanWindow(wc, [&](double eps, double xi) {
      *plan = PlanL2(L2For(o, eps, xi));
      const double g = BinaryTreeMechanism::ErrorBound(
          o.T, plan->tree_epsilon, plan->tree_xi);
      return Guarantee{1.0 + o.eta,
                       4.0 * static_cast<double>(plan->buckets) * g * g /
                           o.eta};
    });
    w.factory = [plan](NoiseContext ctx) {
      return std::make_unique<F2Stream>(*plan, ctx);
    };
    w.inner = {static_cast<double>(plan->copies),
               static_cast<double>(plan->copies)};
  } else if (stat == "moment") {
    auto plan = std::make_shared<MomentPlan>();
    w.plan = PlanWindow(wc, [&](double eps, double xi) {
      *plan = PlanMoment(MomentFor(o, eps, xi));
      return Guarantee{std::pow(1.0 + 2.0 * o.eta, o.p + 2.0),
                       MomentAdditive(*plan)};
    });
    w.factory = [plan](NoiseContext ctx) {
      return MakeMomentEstimator(*plan, ctx);
    };
    w.inner = MomentFootprint(*plan);
  } else {
    throw ConfigError("unknown sliding statistic '" + stat + "'");
  }
  // Without noise the inner estimators are exact skeletons; no shift is
  // needed to make their error relative.
  if (o.noise_off) w.plan.shift = 0.0;
  return w;
}

std::unique_ptr<ContinualEstimator> BuildScalar(std::string_view mechanism,
                                                const RunOptions& o) {
  NoiseContext ctx = MakeContext(o);
  if (mechanism == "sum") {
    return std::make_unique<SummingEstimator>(MakeSummingMechanism(
        SummingSpec{o.variant, o.T, o.epsilon, o.eta, o.xi}, ctx));
  }
  if (mechanism == "distinct") {
    return MakeDistinctEstimator(PlanDistinct(DistinctFor(o, o.epsilon, o.xi)),
                                 ctx);
  }
  if (mechanism == "f2") {
    return std::make_unique<F2Stream>(PlanL2(L2For(o, o.epsilon, o.xi)), ctx);
  }
  if (mechanism == "moment") {
    return MakeMomentEstimator(PlanMoment(MomentFor(o, o.epsilon, o.xi)), ctx);
  }
  if (mechanism == "sliding") {
    WindowWiring w = WireWindow(o);
    return std::make_unique<SmoothHistogram>(w.plan.histogram(), w.factory,
                                             ctx);
  }
  throw ConfigError("unknown mechanism '" + std::string(mechanism) + "'");
}

void CheckFootprint(std::string_view mechanism, const RunOptions& o,
                    int64_t length) {
  const Footprint f = EstimateFootprint(mechanism, o);
  const double work = f.work_per_event * static_cast<double>(length);
  if (work > o.max_work) {
    throw ResourceError(
        std::string(mechanism) + ": estimated work " + FormatNumber(work) +
        " instance-steps exceeds the limit " + FormatNumber(o.max_work) +
        "; lower the copy count (--max-copies) or raise --max-work");
  }
  if (f.sketches > o.max_state) {
    throw ResourceError(
        std::string(mechanism) + ": up to " + FormatNumber(f.sketches) +
        " live sketches exceed the limit " + FormatNumber(o.max_state) +
        "; lower the copy count (--max-copies) or raise --max-state");
  }
}

}  // namespace

bool IsScalarMechanism(std::string_view m) {
  return m == "sum" || m == "distinct" || m == "f2" || m == "moment" ||
         m == "sliding";
}

Footprint EstimateFootprint(std::string_view mechanism, const RunOptions& o) {
  if (mechanism == "sum") return {1.0, 0.0};
  if (mechanism == "distinct") {
    const DistinctPlan p = PlanDistinct(DistinctFor(o, o.epsilon, o.xi));
    if (p.small) return {1.0, 0.0};
    return {static_cast<double>(p.copies) * p.level_params.levels, 0.0};
  }
  if (mechanism == "f2") {
    const double copies =
        static_cast<double>(PlanL2(L2For(o, o.epsilon, o.xi)).copies);
    return {copies, copies};
  }
  if (mechanism == "moment") {
    return MomentFootprint(PlanMoment(MomentFor(o, o.epsilon, o.xi)));
  }
  if (mechanism == "heavy-hitters") {
    return HHFootprint(PlanHeavyHitters(HHFor(o)));
  }
  if (mechanism == "low-freq") {
    const LowFreqPlan p = PlanLowFreq(LowFreqFor(o));
    if (p.small) return {1.0, 0.0};
    return {static_cast<double>(p.copies) * p.general_params.levels, 0.0};
  }
  if (mechanism == "sliding") {
    const WindowWiring w = WireWindow(o);
    const double n = static_cast<double>(w.plan.max_instances);
    return {n * w.inner.work_per_event, n * w.inner.sketches};
  }
  throw ConfigError("unknown mechanism '" + std::string(mechanism) + "'");
}

double EstimateWork(std::string_view mechanism, const RunOptions& o,
                    int64_t length) {
  return EstimateFootprint(mechanism, o).work_per_event *
         static_cast<double>(length);
}

std::vector<SeriesPoint> RunScalar(std::string_view mechanism,
                                   const RunOptions& o, StreamView stream) {
  if (!IsScalarMechanism(mechanism)) {
    throw ConfigError("'" + std::string(mechanism) +
                      "' is not a scalar mechanism");
  }
  const int64_t length = static_cast<int64_t>(stream.size());
  CheckFootprint(mechanism, o, length);
  std::unique_ptr<ContinualEstimator> est = BuildScalar(mechanism, o);

  std::string stat(mechanism);
  if (mechanism == "sliding") stat = o.stat;
  ExactTracker exact(TrackerFor(stat), TrackerPower(stat, o.p));
  const bool windowed = mechanism == "sliding";

  std::vector<SeriesPoint> out;
  for (int64_t t = 1; t <= length; ++t) {
    const StreamEvent& e = stream[t - 1];
    est->Observe(e);
    exact.Add(e);
    if (windowed && t > o.window) exact.Remove(stream[t - 1 - o.window]);
    if (IsReported(t, length, o.report_every)) {
      out.push_back({t, est->Estimate(), exact.Value()});
    }
  }
  return out;
}

CsvTable SumTable(const std::vector<SeriesPoint>& series) {
  CsvTable table{{"t", "estimate", "exact", "abs_error"}, {}};
  for (const SeriesPoint& s : series) {
    table.rows.push_back({FormatNumber(s.t), FormatNumber(s.estimate),
                          FormatNumber(s.exact),
                          FormatNumber(std::abs(s.estimate - s.exact))});
  }
  return table;
}

CsvTable MomentTable(const std::vector<SeriesPoint>& series) {
  CsvTable table{{"t", "F_hat_p", "exact_F_p", "rel_error"}, {}};
  for (const SeriesPoint& s : series) {
    const double rel = s.exact != 0.0
                           ? std::abs(s.estimate - s.exact) / s.exact
                           : std::abs(s.estimate);
    table.rows.push_back({FormatNumber(s.t), FormatNumber(s.estimate),
                          FormatNumber(s.exact), FormatNumber(rel)});
  }
  return table;
}

CsvTable SlidingTable(const std::vector<SeriesPoint>& series) {
  CsvTable table{{"t", "window_estimate", "exact_window_value"}, {}};
  for (const SeriesPoint& s : series) {
    table.rows.push_back({FormatNumber(s.t), FormatNumber(s.estimate),
                          FormatNumber(s.exact)});
  }
  return table;
}

CsvTable RunHeavyHitters(const RunOptions& o, StreamView stream) {
  const int64_t length = static_cast<int64_t>(stream.size());
  CheckFootprint("heavy-hitters", o, length);
  HeavyHitterEstimator est(PlanHeavyHitters(HHFor(o)), MakeContext(o));
  FrequencyTable table;
  CsvTable out{{"t", "element", "f_hat", "exact_f", "in_exact_hh"}, {}};
  for (int64_t t = 1; t <= length; ++t) {
    const StreamEvent& e = stream[t - 1];
    if (e.is_integer()) throw ModeError("heavy hitters need element events");
    est.Observe(e);
    if (e.is_element()) table.Add(e.element());
    if (!IsReported(t, length, o.report_every)) continue;
    const std::vector<uint64_t> hh = ExactHeavyHitters(table, o.p, o.k);
    for (const ReportedItem& item : est.Report()) {
      const bool in = std::binary_search(hh.begin(), hh.end(), item.element);
      out.rows.push_back({FormatNumber(t),
                          FormatNumber(static_cast<int64_t>(item.element)),
                          FormatNumber(item.f_hat),
                          FormatNumber(table.Count(item.element)),
                          in ? "1" : "0"});
    }
  }
  return out;
}

CsvTable RunLowFreq(const RunOptions& o, StreamView stream) {
  const int64_t length = static_cast<int64_t>(stream.size());
  CheckFootprint("low-freq", o, length);
  std::unique_ptr<FrequencyCountEstimator> est =
      MakeLowFreqEstimator(PlanLowFreq(LowFreqFor(o)), MakeContext(o));
  std::unordered_map<uint64_t, int64_t> freq;
  std::vector<int64_t> at(static_cast<size_t>(o.k) + 2, 0);
  CsvTable out{{"t", "j", "s_hat_j", "exact_j"}, {}};
  for (int64_t t = 1; t <= length; ++t) {
    const StreamEvent& e = stream[t - 1];
    est->Observe(e);
    if (e.is_element()) {
      const int64_t f = ++freq[e.element()];
      if (f - 1 >= 1 && f - 1 <= o.k) --at[f - 1];
      if (f <= o.k) ++at[f];
    }
    if (!IsReported(t, length, o.report_every)) continue;
    const std::vector<double> s = est->Estimates();
    for (int64_t j = 1; j <= o.k; ++j) {
      out.rows.push_back({FormatNumber(t), FormatNumber(j),
                          FormatNumber(s[j - 1]), FormatNumber(at[j])});
    }
  }
  return out;
}

CsvTable RunF2(const RunOptions& o, StreamView stream,
               const std::optional<std::string>& snapshot_path) {
  const int64_t length = static_cast<int64_t>(stream.size());
  CheckFootprint("f2", o, length);
  F2Stream est(PlanL2(L2For(o, o.epsilon, o.xi)), MakeContext(o));
  ExactTracker exact(ExactTracker::Kind::kMoment, 2.0);
  std::vector<SeriesPoint> series;
  for (int64_t t = 1; t <= length; ++t) {
    est.Observe(stream[t - 1]);
    exact.Add(stream[t - 1]);
    if (IsReported(t, length, o.report_every)) {
      series.push_back({t, est.Estimate(), exact.Value()});
    }
  }
  if (snapshot_path) est.estimator().WriteSnapshotFile(*snapshot_path);
  return SumTable(series);
}

CsvTable PointQueryTable(const std::string& snapshot_path, uint64_t element) {
  const L2Estimator est = L2Estimator::ReadSnapshotFile(snapshot_path);
  CsvTable out{{"t", "element", "f_hat"}, {}};
  out.rows.push_back({FormatNumber(est.time()),
                      FormatNumber(static_cast<int64_t>(element)),
                      FormatNumber(est.PointQuery(element))});
  return out;
}

RunOptions ResolveShape(RunOptions o, StreamView stream,
                        const StreamConfig& file_config, bool had_header) {
  if (had_header) {
    if (o.T != 0 && o.T != file_config.T) {
      throw ConfigError("stream header T=" + std::to_string(file_config.T) +
                        " differs from --T " + std::to_string(o.T));
    }
    if (o.n != 0 && o.n != file_config.n) {
      throw ConfigError("stream header n=" + std::to_string(file_config.n) +
                        " differs from --n " + std::to_string(o.n));
    }
  }
  if (o.T == 0) {
    o.T = had_header ? file_config.T
                     : std::max<int64_t>(1, static_cast<int64_t>(stream.size()));
  }
  if (o.n == 0 && had_header) o.n = std::max<uint64_t>(1, file_config.n);
  if (o.n == 0) {
    // Smallest universe holding every id in the stream.
    o.n = 1;
    for (const StreamEvent& e : stream) {
      if (e.is_element()) o.n = std::max(o.n, e.element() + 1);
    }
  }
  StreamConfig cfg{o.T, o.n, file_config.mode};
  cfg.Validate();
  ValidateStream(stream, cfg);
  return o;
}

std::vector<std::string> SensitivityMappings() {
  return {"identity",       "first-arrival",    "frequency-counters",
          "bucket-streams", "substreams",       "level-streams",
          "level-indicators", "moment-levels"};
}

int64_t ClaimedBound(const std::string& mapping, int64_t k) {
  if (mapping == "identity") return 1;
  if (mapping == "first-arrival") return kFirstArrivalSensitivity;
  if (mapping == "frequency-counters") return kCounterStreamSensitivity * k;
  if (mapping == "bucket-streams") return 2;
  if (mapping == "substreams") return 2;
  if (mapping == "level-streams") return 1;
  if (mapping == "level-indicators") return kFirstArrivalSensitivity;
  if (mapping == "moment-levels") return 3;
  throw ConfigError("unknown mapping '" + mapping + "'");
}

SensitivityCheckResult RunSensitivityCheck(const SensitivityCheckSpec& spec) {
  SensitivityCheckResult result;
  result.spec = spec;
  result.bound = ClaimedBound(spec.mapping, spec.k);
  if (spec.n < 1 || spec.T < 1) throw ConfigError("n and T must be >= 1");
  if (spec.k < 1) throw ConfigError("k must be >= 1");
  NoiseContext ctx(spec.seed);
  StreamMapping mapping;
  const std::string& m = spec.mapping;
  const int levels = std::max(
      1, CeilLog2(std::min<uint64_t>(spec.n, static_cast<uint64_t>(spec.T))));
  const int lambda = RoundUpEvenAtLeast4(2.0 * std::log2(1000.0 * levels));
  if (m == "identity") {
    mapping = IdentityMapping;
  } else if (m == "first-arrival") {
    mapping = FirstArrivalMapping;
  } else if (m == "frequency-counters") {
    const int k = static_cast<int>(spec.k);
    mapping = [k](StreamView s) { return FrequencyCounterMapping(s, k); };
  } else if (m == "bucket-streams") {
    BucketRouter router(8, ctx);
    mapping = [router](StreamView s) { return BucketMapping(router, s); };
  } else if (m == "substreams") {
    PolyHash hash(2, static_cast<uint64_t>(10 * spec.k * spec.k), ctx);
    mapping = [hash](StreamView s) { return SubstreamMapping(hash, s); };
  } else if (m == "level-streams" || m == "level-indicators") {
    LevelRouter router(levels, lambda, 1000, ctx);
    if (m == "level-streams") {
      mapping = [router](StreamView s) {
        return LevelStreamsMapping(router, s);
      };
    } else {
      mapping = [router](StreamView s) {
        return LevelIndicatorMapping(router, s);
      };
    }
  } else if (m == "moment-levels") {
    const int moment_levels = std::max(1, CeilLog2(spec.n));
    GeometricLevelHash hash(moment_levels, 4, ctx);
    mapping = [hash](StreamView s) { return MomentLevelMapping(hash, s); };
  }
  result.report =
      MappingSensitivity(mapping, spec.n, spec.T, spec.relation, spec.budget);
  return result;
}

CsvTable SensitivityTable(const std::vector<SensitivityCheckResult>& results) {
  CsvTable out{{"mapping", "relation", "n", "T", "k", "seed", "max_distance",
                "bound", "pairs", "status"},
               {}};
  for (const SensitivityCheckResult& r : results) {
    out.rows.push_back(
        {r.spec.mapping,
         r.spec.relation == NeighborRelation::kSubstitution ? "substitution"
                                                            : "empty",
         FormatNumber(static_cast<int64_t>(r.spec.n)), FormatNumber(r.spec.T),
         FormatNumber(r.spec.k),
         FormatNumber(static_cast<int64_t>(r.spec.seed)),
         FormatNumber(r.report.max_distance), FormatNumber(r.bound),
         FormatNumber(r.report.pairs_checked), r.pass() ? "PASS" : "FAIL"});
  }
  return out;
}

// --- experiments -----------------------------------------------------------

void ExperimentSpec::Validate() const {
  if (!IsScalarMechanism(mechanism)) {
    throw ConfigError("experiments support sum, distinct, f2, moment and "
                      "sliding; got '" + mechanism + "'");
  }
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (grid.empty()) throw ConfigError("parameter grid must not be empty");
  static const char* kNames[] = {"epsilon", "eta", "xi", "p", "k", "W"};
  for (const auto& [name, values] : grid) {
    if (std::find(std::begin(kNames), std::end(kNames), name) ==
        std::end(kNames)) {
      throw ConfigError("unknown grid parameter '" + name + "'");
    }
    if (values.empty()) {
      throw ConfigError("grid parameter '" + name + "' has no values");
    }
  }
  if (T < 1 || n < 1) throw ConfigError("T and n must be >= 1");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  GeneratorSpec::Parse(generator);
}

ExperimentSpec ExperimentSpec::FromJson(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("experiment spec: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("experiment spec must be an object");
  ExperimentSpec s;
  try {
    s.mechanism = j.value("mechanism", s.mechanism);
    s.generator = j.value("generator", s.generator);
    s.T = j.value("T", s.T);
    s.n = j.value("n", s.n);
    s.trials = j.value("trials", s.trials);
    s.seed = j.value("seed", s.seed);
    s.output = j.value("output", s.output);
    s.threads = j.value("threads", s.threads);
    if (j.contains("grid")) {
      for (const auto& [name, v] : j.at("grid").items()) {
        std::vector<double> values;
        if (v.is_array()) {
          for (const auto& x : v) values.push_back(x.get<double>());
        } else {
          values.push_back(v.get<double>());
        }
        s.grid[name] = values;
      }
    }
    RunOptions& b = s.base;
    b.epsilon = j.value("epsilon", b.epsilon);
    b.eta = j.value("eta", b.eta);
    b.xi = j.value("xi", b.xi);
    b.p = j.value("p", b.p);
    b.k = j.value("k", b.k);
    b.window = j.value("W", b.window);
    b.noise_off = j.value("noise", std::string("on")) == "off";
    b.variant = ParseBackend(j.value("variant", std::string("tree")));
    b.stat = j.value("stat", b.stat);
    b.beta_c = j.value("beta_c", b.beta_c);
    b.max_copies = j.value("max_copies", b.max_copies);
    b.max_buckets = j.value("max_buckets", b.max_buckets);
    b.max_heavy_k = j.value("max_heavy_k", b.max_heavy_k);
    b.report_every = j.value("report_every", b.report_every);
    b.max_work = j.value("max_work", b.max_work);
    b.max_state = j.value("max_state", b.max_state);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment spec: ") + e.what());
  }
  s.Validate();
  return s;
}

ExperimentSpec ExperimentSpec::FromFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open experiment spec '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return FromJson(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.line());
  }
}

uint64_t TrialStreamSeed(uint64_t base, int64_t trial) {
  return HashCombine(Mix64(base ^ 0x73747265616dULL),
                     static_cast<uint64_t>(trial));
}

uint64_t TrialMechanismSeed(uint64_t base, int64_t trial) {
  return HashCombine(Mix64(base ^ 0x6d656368ULL), static_cast<uint64_t>(trial));
}

RunSummary Summarize(const std::vector<SeriesPoint>& rows) {
  RunSummary s;
  if (rows.empty()) return s;
  std::vector<double> err;
  err.reserve(rows.size());
  for (const SeriesPoint& r : rows) err.push_back(std::abs(r.estimate - r.exact));
  std::sort(err.begin(), err.end());
  auto rank = [&err](double q) {
    const size_t n = err.size();
    size_t idx = static_cast<size_t>(std::ceil(q * static_cast<double>(n)));
    idx = std::clamp<size_t>(idx, 1, n);
    return err[idx - 1];
  };
  s.max_error = err.back();
  s.q50 = rank(0.5);
  s.q90 = rank(0.9);
  s.q99 = rank(0.99);
  return s;
}

namespace {

std::vector<std::map<std::string, double>> GridPoints(
    const std::map<std::string, std::vector<double>>& grid) {
  std::vector<std::map<std::string, double>> points(1);
  for (const auto& [name, values] : grid) {
    std::vector<std::map<std::string, double>> next;
    for (const auto& p : points) {
      for (double v : values) {
        auto q = p;
        q[name] = v;
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  return points;
}

RunOptions Apply(RunOptions o, const std::map<std::string, double>& point) {
  for (const auto& [name, v] : point) {
    if (name == "epsilon") o.epsilon = v;
    if (name == "eta") o.eta = v;
    if (name == "xi") o.xi = v;
    if (name == "p") o.p = v;
    if (name == "k") o.k = static_cast<int64_t>(v);
    if (name == "W") o.window = static_cast<int64_t>(v);
  }
  return o;
}

std::string PointLabel(const std::map<std::string, double>& point) {
  std::string label;
  for (const auto& [name, v] : point) {
    if (!label.empty()) label += '_';
    label += name + "=" + FormatNumber(v);
  }
  return label;
}

void WriteFile(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  table.Write(out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

ExperimentResult RunExperiment(const ExperimentSpec& spec) {
  spec.Validate();
  const GeneratorSpec gen = GeneratorSpec::Parse(spec.generator);
  const StreamConfig stream_config{
      spec.T, spec.n,
      gen.integer_kind() ? StreamMode::kIntegers : StreamMode::kElements};
  const auto points = GridPoints(spec.grid);

  ExperimentResult result;
  result.records.resize(points.size() * static_cast<size_t>(spec.trials));
  std::vector<std::exception_ptr> errors(result.records.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t job = next++; job < result.records.size(); job = next++) {
      const size_t pi = job / static_cast<size_t>(spec.trials);
      const int64_t trial =
          static_cast<int64_t>(job % static_cast<size_t>(spec.trials));
      try {
        RunOptions o = Apply(spec.base, points[pi]);
        o.T = spec.T;
        o.n = spec.n;
        o.seed = TrialMechanismSeed(spec.seed, trial);
        const Stream stream = GenerateStream(
            gen, stream_config, TrialStreamSeed(spec.seed, trial));
        const auto start = std::chrono::steady_clock::now();
        RunRecord& rec = result.records[job];
        rec.point = points[pi];
        rec.trial = trial;
        rec.rows = RunScalar(spec.mechanism, o, stream);
        rec.summary = Summarize(rec.rows);
        rec.summary.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          start)
                .count();
      } catch (...) {
        errors[job] = std::current_exception();
      }
    }
  };
  size_t threads = spec.threads > 0
                       ? static_cast<size_t>(spec.threads)
                       : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, result.records.size());
  std::vector<std::thread> pool;
  for (size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const std::filesystem::path dir(spec.output);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create output directory '" + dir.string() +
                  "': " + ec.message());
  }
  for (size_t pi = 0; pi < points.size(); ++pi) {
    CsvTable rows{{"trial", "t", "estimate", "exact", "error"}, {}};
    CsvTable summary{{"trial", "max_error", "q50", "q90", "q99"}, {}};
    for (int64_t trial = 0; trial < spec.trials; ++trial) {
      const RunRecord& rec =
          result.records[pi * static_cast<size_t>(spec.trials) +
                         static_cast<size_t>(trial)];
      for (const SeriesPoint& s : rec.rows) {
        rows.rows.push_back({FormatNumber(trial), FormatNumber(s.t),
                             FormatNumber(s.estimate), FormatNumber(s.exact),
                             FormatNumber(std::abs(s.estimate - s.exact))});
      }
      summary.rows.push_back(
          {FormatNumber(trial), FormatNumber(rec.summary.max_error),
           FormatNumber(rec.summary.q50), FormatNumber(rec.summary.q90),
           FormatNumber(rec.summary.q99)});
    }
    const std::string stem = spec.mechanism + "_" + PointLabel(points[pi]);
    const auto rows_path = dir / (stem + ".csv");
    const auto summary_path = dir / (stem + "_summary.csv");
    WriteFile(rows_path, rows);
    WriteFile(summary_path, summary);
    result.files.push_back(rows_path.string());
    result.files.push_back(summary_path.string());
  }
  return result;
}

}  // namespace dpstream::harness
