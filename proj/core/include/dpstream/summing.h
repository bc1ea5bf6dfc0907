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

// Continual-release summing: the binary-tree mechanism (signed inputs) and
// the grouping mechanism (non-negative inputs, relative plus smaller additive
// error).

#ifndef DPSTREAM_SUMMING_H_
#define DPSTREAM_SUMMING_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dpstream/random.h"

namespace dpstream {

// With probability 1 - xi the released value y satisfies
//   x / alpha - gamma <= y <= alpha * x + gamma
// for the exact value x, at every timestamp.
struct Guarantee {
  double alpha = 1.0;
  double gamma = 0.0;
};

enum class SummingBackend { kTree, kGrouping };

std::string_view BackendName(SummingBackend backend);
SummingBackend ParseBackend(std::string_view name);

class SummingMechanism {
 public:
  virtual ~SummingMechanism() = default;

  // Appends one input and returns the released prefix sum.
  virtual double Feed(int64_t x) = 0;
  // Released prefix sum at the current timestamp (0 before any input).
  virtual double Estimate() const = 0;

  virtual int64_t time() const = 0;
  virtual int64_t horizon() const = 0;
  virtual int64_t exact_sum() const = 0;
  virtual Guarantee guarantee() const = 0;
};

struct TreeParams {
  int64_t horizon = 1;
  double epsilon = 1.0;
  // Failure probability used only to state the additive bound.
  double xi = 0.05;

  void Validate() const;
};

// Dyadic-interval tree. Node noise is drawn lazily from keyed randomness, so
// the state is the exact prefix sum plus the clock; the released value at t
// adds one Laplace((levels)/epsilon) draw per set bit of t.
class BinaryTreeMechanism final : public SummingMechanism {
 public:
  BinaryTreeMechanism(TreeParams params, NoiseContext ctx);

  double Feed(int64_t x) override;
  double Estimate() const override;
  int64_t time() const override { return t_; }
  int64_t horizon() const override { return params_.horizon; }
  int64_t exact_sum() const override { return sum_; }
  Guarantee guarantee() const override;

  // ceil(log2 T) + 1: the number of tree nodes any input touches is at most
  // this.
  static int Levels(int64_t horizon);
  static double NodeScale(int64_t horizon, double epsilon);
  // Bound on |error| holding at every t with probability >= 1 - xi: a union
  // bound over the at most 2T nodes, times the at most Levels nodes summed.
  static double ErrorBound(int64_t horizon, double epsilon, double xi);

  // Sum of the node noises in the decomposition of [1, t]; `salt`
  // distinguishes counters sharing one context.
  static double DecompositionNoise(const NoiseContext& ctx, uint64_t salt,
                                   int64_t t, double scale);

 private:
  TreeParams params_;
  NoiseContext ctx_;
  double scale_;
  int64_t t_ = 0;
  int64_t sum_ = 0;
};

// k tree counters on a shared clock with sparse exact state. Advancing the
// clock is O(1) and each read is O(log T), so banks with very many mostly
// idle counters (CountSketch buckets, frequency counters) stay cheap.
class TreeCounterBank {
 public:
  TreeCounterBank(uint64_t counters, TreeParams params, NoiseContext ctx);

  // Starts the next timestamp; every counter receives 0 unless Add is called
  // before the next Advance.
  void Advance();
  // Moves the clock to `t`, all skipped inputs being 0.
  void AdvanceTo(int64_t t);
  void Add(uint64_t counter, int64_t delta);

  double Estimate(uint64_t counter) const;
  double Noise(uint64_t counter) const;
  int64_t exact(uint64_t counter) const;

  int64_t time() const { return t_; }
  uint64_t counters() const { return counters_; }
  const TreeParams& params() const { return params_; }
  const NoiseContext& context() const { return ctx_; }
  double node_scale() const { return scale_; }
  const std::unordered_map<uint64_t, int64_t>& nonzero() const {
    return sums_;
  }
  // Restores exact state (snapshots).
  void Restore(int64_t t, std::unordered_map<uint64_t, int64_t> sums);

 private:
  uint64_t counters_;
  TreeParams params_;
  NoiseContext ctx_;
  double scale_;
  int64_t t_ = 0;
  std::unordered_map<uint64_t, int64_t> sums_;
};

struct GroupingParams {
  int64_t horizon = 1;
  double epsilon = 1.0;
  double eta = 0.1;
  double xi = 0.05;
  // Replaces the deterministic part of the threshold. Privacy does not
  // depend on it; tests use it to exercise group closing at tiny scale.
  std::optional<double> base_threshold;

  void Validate() const;
};

// Sparse-vector grouping of a non-negative stream. A group closes when its
// exact total plus fresh Laplace(4/eps0) noise reaches a noisy threshold;
// only then is a noisy group total released. eps0 = epsilon / 2.
class GroupingMechanism final : public SummingMechanism {
 public:
  GroupingMechanism(GroupingParams params, NoiseContext ctx);

  double Feed(int64_t c) override;
  double Estimate() const override { return released_prefix_; }
  int64_t time() const override { return t_; }
  int64_t horizon() const override { return params_.horizon; }
  int64_t exact_sum() const override { return exact_prefix_; }
  Guarantee guarantee() const override;

  // (1/eta + 1) (7/eps0) ln(3T/xi).
  static double BaseThreshold(const GroupingParams& params);
  // (1/eta + 4) (7/eps0) ln(3T/xi).
  static double AdditiveBound(const GroupingParams& params);
  // (7/(eta eps0)) ln(3T/xi) + (13/eps0) ln(3T/xi): bound on any non-final
  // prefix of a group and on the last group's total.
  static double GroupPrefixBound(const GroupingParams& params);

  double last_release() const { return last_release_; }
  bool last_closed() const { return last_closed_; }
  double threshold() const { return tau_; }
  int64_t group_sum() const { return group_sum_; }
  int64_t groups_closed() const { return groups_closed_; }
  const GroupingParams& params() const { return params_; }

 private:
  void DrawThreshold();

  GroupingParams params_;
  NoiseContext ctx_;
  double eps0_;
  double base_;
  double tau_ = 0.0;
  int64_t t_ = 0;
  int64_t group_sum_ = 0;
  int64_t exact_prefix_ = 0;
  double released_prefix_ = 0.0;
  double last_release_ = 0.0;
  bool last_closed_ = false;
  int64_t groups_closed_ = 0;
};

struct SummingSpec {
  SummingBackend backend = SummingBackend::kTree;
  int64_t horizon = 1;
  double epsilon = 1.0;
  double eta = 0.1;  // grouping only
  double xi = 0.05;
};

std::unique_ptr<SummingMechanism> MakeSummingMechanism(const SummingSpec& spec,
                                                       NoiseContext ctx);
// The (alpha, gamma) the backend promises with probability 1 - xi.
Guarantee SummingGuarantee(const SummingSpec& spec);

}  // namespace dpstream

#endif  // DPSTREAM_SUMMING_H_
