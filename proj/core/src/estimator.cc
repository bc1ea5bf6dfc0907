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

#include "dpstream/estimator.h"

#include <cmath>

#include "dpstream/errors.h"
#include "dpstream/random.h"

namespace dpstream {

MedianOfCopies::MedianOfCopies(
    std::vector<std::unique_ptr<ContinualEstimator>> c)
    : copies_(std::move(c)) {
  if (copies_.empty()) throw ConfigError("median needs at least one copy");
}

void MedianOfCopies::Observe(const StreamEvent& event) {
  for (auto& c : copies_) c->Observe(event);
}

double MedianOfCopies::Estimate() const {
  std::vector<double> values;
  values.reserve(copies_.size());
  for (const auto& c : copies_) values.push_back(c->Estimate());
  return MedianBoost(values);
}

int64_t MedianOfCopies::time() const { return copies_.front()->time(); }

uint64_t ClampHashRange(double m) {
  if (std::isnan(m)) throw DomainError("hash range is NaN");
  if (m < 1.0) return 1;
  if (m >= static_cast<double>(kMersenne61)) return kMersenne61;
  return static_cast<uint64_t>(std::ceil(m));
}

}  // namespace dpstream
