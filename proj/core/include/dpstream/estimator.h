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

#ifndef DPSTREAM_ESTIMATOR_H_
#define DPSTREAM_ESTIMATOR_H_

#include <cstdint>
#include <memory>
#include <vector>

#include "dpstream/stream.h"

namespace dpstream {

// Uniform continual-release contract: observe one event per timestamp, and
// release an estimate for the current prefix. Estimate() is separate from
// Observe() because some estimators are expensive to evaluate and callers
// may only need a subset of timestamps; releasing fewer outputs is
// post-processing of the full release.
class ContinualEstimator {
 public:
  virtual ~ContinualEstimator() = default;

  virtual void Observe(const StreamEvent& event) = 0;
  virtual double Estimate() const = 0;
  virtual int64_t time() const = 0;

  double Feed(const StreamEvent& event) {
    Observe(event);
    return Estimate();
  }
};

// Median of independent copies, evaluated per timestamp.
class MedianOfCopies final : public ContinualEstimator {
 public:
  explicit MedianOfCopies(std::vector<std::unique_ptr<ContinualEstimator>> c);

  void Observe(const StreamEvent& event) override;
  double Estimate() const override;
  int64_t time() const override;

  size_t copies() const { return copies_.size(); }
  const ContinualEstimator& copy(size_t i) const { return *copies_[i]; }

 private:
  std::vector<std::unique_ptr<ContinualEstimator>> copies_;
};

// Optional limits applied on top of the theoretical parameter settings so
// experiments fit on a workstation. A zero field means "no cap". Privacy
// accounting always follows the values actually used.
struct DeskCaps {
  int64_t max_copies = 0;
  uint64_t max_buckets = 0;

  int64_t Copies(int64_t theory) const {
    return max_copies > 0 && max_copies < theory ? max_copies : theory;
  }
  uint64_t Buckets(uint64_t theory) const {
    return max_buckets > 0 && max_buckets < theory ? max_buckets : theory;
  }
};

// Clamps a real-valued size into [1, 2^61 - 1], the largest range a field
// hash can address.
uint64_t ClampHashRange(double m);

}  // namespace dpstream

#endif  // DPSTREAM_ESTIMATOR_H_
