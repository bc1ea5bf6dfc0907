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

// Brute-force sensitivity of stream mappings: the largest total distance
// between derived streams over all neighboring input pairs.

#ifndef DPSTREAM_SENSITIVITY_H_
#define DPSTREAM_SENSITIVITY_H_

#include <cstdint>
#include <functional>
#include <vector>

#include "dpstream/stream.h"

namespace dpstream {

inline constexpr int64_t kEmptySymbol = -1;

// A stream produced by a mapping. Count streams are compared by the sum of
// absolute differences (neighboring summing inputs differ by 1 per unit
// step); symbol streams by the number of differing positions.
struct DerivedStream {
  enum class Kind { kCounts, kSymbols };

  Kind kind = Kind::kCounts;
  std::vector<int64_t> values;
};

using DerivedTuple = std::vector<DerivedStream>;
using StreamMapping = std::function<DerivedTuple(StreamView)>;

int64_t DerivedDistance(const DerivedTuple& a, const DerivedTuple& b);

enum class NeighborRelation {
  // One timestamp changes to any other value of U ∪ {empty}.
  kSubstitution,
  // One timestamp changes between an element and the empty symbol.
  kEmptyReplacement,
};

struct SensitivityReport {
  int64_t max_distance = 0;
  int64_t pairs_checked = 0;
  // A neighboring pair attaining the maximum.
  Stream witness_a;
  Stream witness_b;
};

inline constexpr int64_t kDefaultEnumerationBudget = 10'000'000;

// Enumerates every element-mode stream of length T over n elements plus the
// empty symbol and every neighboring pair. Throws ResourceError when the
// number of pair comparisons would exceed `budget`.
SensitivityReport MappingSensitivity(
    const StreamMapping& mapping, uint64_t n, int64_t T,
    NeighborRelation relation = NeighborRelation::kSubstitution,
    int64_t budget = kDefaultEnumerationBudget);

// Number of pair comparisons MappingSensitivity would perform.
double EnumerationCost(uint64_t n, int64_t T, NeighborRelation relation);

// The identity mapping (one symbol stream).
DerivedTuple IdentityMapping(StreamView stream);

}  // namespace dpstream

#endif  // DPSTREAM_SENSITIVITY_H_
