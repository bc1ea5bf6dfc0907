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

// Continual-release l_p heavy hitters. Elements are hashed into m = 10 k^2
// substreams; each substream carries a private F2 estimator and a private
// point-query sketch, and an element is a candidate while its estimated
// frequency clears a threshold relative to its substream's F2.

#ifndef DPSTREAM_HEAVY_HITTERS_H_
#define DPSTREAM_HEAVY_HITTERS_H_

#include <cstdint>
#include <map>
#include <memory>
#include <unordered_map>
#include <vector>

#include "dpstream/budget.h"
#include "dpstream/countsketch.h"
#include "dpstream/estimator.h"
#include "dpstream/random.h"
#include "dpstream/sensitivity.h"

namespace dpstream {

struct HHConfig {
  double p = 2.0;
  int64_t k = 4;
  double eta = 0.2;
  double epsilon = 1.0;
  double xi = 0.05;
  uint64_t n = 1;
  int64_t T = 1;
  // Exponent of the log factor in the reporting threshold tau.
  double tau_exponent = 3.0;
  // Constants of the candidacy test
  //   f^2 >= (F2 + gamma1) / (f2_divisor phi k) + gamma_factor gamma2^2 / eta^2.
  double f2_divisor = 25.0;
  double gamma_factor = 512.0;
  // Treat both backends as exact (gamma1 = gamma2 = 0). Only meaningful
  // together with noise-free contexts.
  bool exact_backends = false;
  DeskCaps caps;

  void Validate() const;
};

// Parameters of one copy of the algorithm.
struct HHParams {
  double p = 2.0;
  int64_t k = 1;
  double eta = 0.2;
  double phi = 1.0;          // max(1, n^(1 - 2/p))
  uint64_t substreams = 10;  // 10 k^2
  double gamma1 = 0.0;       // additive error of the substream F2
  double gamma2 = 0.0;       // additive error of the point query
  double f2_divisor = 25.0;
  double gamma_factor = 512.0;
  size_t report_cap = 1;     // floor(((1+eta)/(1-eta))^p k)
  L2Plan point_query;
  L2Plan f2;

  // f^2 must reach at least this for any element to pass the test.
  double FixedThreshold() const {
    return gamma_factor * gamma2 * gamma2 / (eta * eta);
  }
  // Frequency above which a heavy element is guaranteed to be a candidate
  // with constant probability: 4 sqrt(gamma1/(phi k) + 512 gamma2^2/eta^2).
  double RecallFrequency() const;
};

struct HHPlan {
  HHConfig config;
  int64_t theory_copies = 1;
  int64_t copies = 1;
  double subroutine_epsilon = 0;  // epsilon / (4 copies)
  double subroutine_xi = 0;
  double tau = 0;                 // (1/(eps eta)) ln^C(T k n / (xi eta))
  HHParams params;
  MechanismBudget budget{1.0, 0.0};
};

HHPlan PlanHeavyHitters(const HHConfig& config);

// Substream i receives a_t when h(a_t) = i and the empty symbol otherwise.
DerivedTuple SubstreamMapping(const PolyHash& substream_hash,
                              StreamView stream);

struct ReportedItem {
  uint64_t element;
  double f_hat;
};

class HeavyHitters {
 public:
  HeavyHitters(const HHParams& params, NoiseContext ctx);
  HeavyHitters(const HHParams& params, PolyHash substream_hash,
               NoiseContext ctx);

  void Observe(const StreamEvent& event);

  // H, ordered by decreasing estimate then increasing id.
  const std::vector<ReportedItem>& reported() const { return reported_; }
  size_t candidates() const { return candidates_.size(); }
  int64_t time() const { return t_; }
  // Substreams that have seen at least one element.
  size_t active_substreams() const { return subs_.size(); }
  const PolyHash& substream_hash() const { return hash_; }

 private:
  struct Substream {
    L2Estimator point_query;
    L2Estimator f2;
  };

  Substream& Get(uint64_t index);
  // Runs the candidacy test; writes the clamped estimate into f_hat.
  bool Passes(uint64_t a, double& f_hat);

  HHParams params_;
  PolyHash hash_;
  NoiseContext ctx_;
  int64_t t_ = 0;
  std::unordered_map<uint64_t, std::unique_ptr<Substream>> subs_;
  std::map<uint64_t, double> candidates_;
  std::vector<ReportedItem> reported_;
};

// Union over independent copies; the estimate of an element comes from the
// lowest-index copy reporting it.
class HeavyHitterEstimator {
 public:
  HeavyHitterEstimator(const HHPlan& plan, NoiseContext ctx);

  void Observe(const StreamEvent& event);
  // Sorted by id.
  std::vector<ReportedItem> Report() const;
  int64_t time() const { return copies_.front()->time(); }
  size_t copies() const { return copies_.size(); }
  const HeavyHitters& copy(size_t i) const { return *copies_[i]; }

 private:
  std::vector<std::unique_ptr<HeavyHitters>> copies_;
};

}  // namespace dpstream

#endif  // DPSTREAM_HEAVY_HITTERS_H_
