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

// Continual-release CountSketch: every bucket is a tree counter receiving the
// signed indicator of elements hashed to it. Supports point queries and the
// second frequency moment, and a median-boosted wrapper.

#ifndef DPSTREAM_COUNTSKETCH_H_
#define DPSTREAM_COUNTSKETCH_H_

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dpstream/budget.h"
#include "dpstream/estimator.h"
#include "dpstream/random.h"
#include "dpstream/sensitivity.h"
#include "dpstream/summing.h"

namespace dpstream {

// h: 4-wise hash into [k]; g: 4-wise sign hash.
class BucketRouter {
 public:
  struct Route {
    uint64_t bucket;
    int sign;
  };

  BucketRouter() = default;
  BucketRouter(uint64_t buckets, NoiseContext& ctx);
  BucketRouter(PolyHash bucket_hash, SignHash sign_hash);

  std::optional<Route> operator()(const StreamEvent& event) const;
  Route RouteElement(uint64_t a) const { return {h_(a), g_(a)}; }
  uint64_t buckets() const { return h_.range(); }
  const PolyHash& bucket_hash() const { return h_; }
  const SignHash& sign_hash() const { return g_; }

 private:
  PolyHash h_;
  SignHash g_;
};

// The k bucket input streams (sensitivity <= 2).
DerivedTuple BucketMapping(const BucketRouter& router, StreamView stream);

struct CountSketchParams {
  uint64_t buckets = 1;
  int64_t horizon = 1;
  // Budget of each bucket tree; the sketch as a whole is 2*epsilon-DP.
  double epsilon = 1.0;
  // Failure probability behind the per-bucket additive bound.
  double xi = 0.05;

  void Validate() const;
};

struct F2Estimate {
  double value = 0;
  // The relative target this bucket count is sized for: 20 / sqrt(k).
  double eta = 0;
  // 4 k gamma^2 / eta.
  double additive = 0;
};

class CountSketch {
 public:
  // Draws h and g from `ctx`, then derives the noise context from it.
  CountSketch(CountSketchParams params, NoiseContext ctx);
  CountSketch(CountSketchParams params, BucketRouter router,
              NoiseContext noise_ctx);

  void Observe(const StreamEvent& event);
  // Feeds empty events up to timestamp t.
  void AdvanceTo(int64_t t);

  double Bucket(uint64_t i) const { return bank_.Estimate(i); }
  int64_t ExactBucket(uint64_t i) const { return bank_.exact(i); }
  // All k released buckets; k must be modest.
  std::vector<double> Buckets() const;

  // g(a) z_{h(a)}.
  double PointQuery(uint64_t a) const;
  // Sum of squared released buckets. With noise this reads all k buckets.
  F2Estimate F2() const;

  int64_t time() const { return bank_.time(); }
  // Per-bucket additive error bound of the tree counters.
  double gamma() const;
  const CountSketchParams& params() const { return params_; }
  const BucketRouter& router() const { return router_; }
  const TreeCounterBank& bank() const { return bank_; }

  void WriteSnapshot(std::ostream& out) const;
  static CountSketch ReadSnapshot(std::istream& in);

 private:
  CountSketchParams params_;
  BucketRouter router_;
  TreeCounterBank bank_;
  int64_t exact_f2_ = 0;
};

struct L2Config {
  double epsilon = 1.0;
  double eta = 0.2;
  double xi = 0.05;
  uint64_t n = 1;
  int64_t T = 1;
  DeskCaps caps;

  void Validate() const;
};

struct L2Plan {
  L2Config config;
  int64_t theory_copies = 1;
  int64_t copies = 1;
  uint64_t theory_buckets = 1;  // ceil(400 / eta^2)
  uint64_t buckets = 1;
  double tree_epsilon = 0;      // epsilon / (2 copies)
  double tree_xi = 0;
  MechanismBudget budget{1.0, 0.0};

  CountSketchParams sketch_params() const {
    return {buckets, config.T, tree_epsilon, tree_xi};
  }
};

// ceil(50 (ln(2T/xi) + ln n)) copies of a sketch with 400/eta^2 buckets,
// each bucket tree at epsilon/(2 copies).
L2Plan PlanL2(const L2Config& config);

// Median over independent sketches of point queries and F2.
class L2Estimator {
 public:
  L2Estimator(const L2Plan& plan, NoiseContext ctx);
  explicit L2Estimator(std::vector<CountSketch> sketches);

  void Observe(const StreamEvent& event);
  void AdvanceTo(int64_t t);
  double PointQuery(uint64_t a) const;
  double F2() const;
  int64_t time() const { return sketches_.front().time(); }

  size_t copies() const { return sketches_.size(); }
  const CountSketch& copy(size_t i) const { return sketches_[i]; }

  // Little-endian binary: "DPCS1", u32 copy count, then per sketch the
  // parameters, hash coefficients, noise seed and sparse bucket sums.
  void WriteSnapshot(std::ostream& out) const;
  static L2Estimator ReadSnapshot(std::istream& in);
  void WriteSnapshotFile(const std::string& path) const;
  static L2Estimator ReadSnapshotFile(const std::string& path);

 private:
  std::vector<CountSketch> sketches_;
};

// Continual-release F2 through the uniform estimator interface.
class F2Stream final : public ContinualEstimator {
 public:
  F2Stream(const L2Plan& plan, NoiseContext ctx) : estimator_(plan, ctx) {}

  void Observe(const StreamEvent& event) override {
    estimator_.Observe(event);
  }
  double Estimate() const override { return estimator_.F2(); }
  int64_t time() const override { return estimator_.time(); }
  const L2Estimator& estimator() const { return estimator_; }

 private:
  L2Estimator estimator_;
};

}  // namespace dpstream

#endif  // DPSTREAM_COUNTSKETCH_H_
