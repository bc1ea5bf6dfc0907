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

#include "dpstream/sensitivity.h"

#include <gtest/gtest.h>

#include "dpstream/distinct.h"
#include "dpstream/errors.h"
#include "dpstream/stream.h"

namespace dpstream {
namespace {

DerivedStream Counts(std::vector<int64_t> v) {
  return {DerivedStream::Kind::kCounts, std::move(v)};
}
DerivedStream Symbols(std::vector<int64_t> v) {
  return {DerivedStream::Kind::kSymbols, std::move(v)};
}

TEST(DerivedDistanceTest, CountsAreL1SymbolsAreHamming) {
  EXPECT_EQ(DerivedDistance({Counts({1, 0, 3})}, {Counts({0, 2, 3})}), 3);
  EXPECT_EQ(DerivedDistance({Symbols({1, 5, 3})}, {Symbols({1, 6, 4})}), 2);
  EXPECT_EQ(DerivedDistance({Counts({1}), Symbols({2})},
                            {Counts({-1}), Symbols({kEmptySymbol})}),
            3);
}

TEST(DerivedDistanceTest, ShapeMismatch) {
  EXPECT_THROW(DerivedDistance({Counts({1})}, {}), ShapeError);
  EXPECT_THROW(DerivedDistance({Counts({1})}, {Symbols({1})}), ShapeError);
  EXPECT_THROW(DerivedDistance({Counts({1})}, {Counts({1, 2})}), ShapeError);
}

TEST(MappingSensitivityTest, IdentityIsOne) {
  const SensitivityReport r = MappingSensitivity(IdentityMapping, 2, 3);
  EXPECT_EQ(r.max_distance, 1);
  // 27 streams, 3 positions, one larger symbol on average per position.
  EXPECT_EQ(r.pairs_checked, 81);
  EXPECT_EQ(StreamDistance(r.witness_a, r.witness_b), 1);
}

TEST(MappingSensitivityTest, EmptyReplacementPairCount) {
  const SensitivityReport r = MappingSensitivity(
      IdentityMapping, 2, 3, NeighborRelation::kEmptyReplacement);
  // Positions holding the empty symbol: 27 * 3 / 3, each with 2 partners.
  EXPECT_EQ(r.pairs_checked, 54);
  EXPECT_DOUBLE_EQ(EnumerationCost(2, 3, NeighborRelation::kEmptyReplacement),
                   54.0);
  EXPECT_DOUBLE_EQ(EnumerationCost(2, 3, NeighborRelation::kSubstitution), 81.0);
}

TEST(MappingSensitivityTest, WitnessAttainsMaximum) {
  const SensitivityReport r = MappingSensitivity(FirstArrivalMapping, 3, 5);
  EXPECT_LE(r.max_distance, kFirstArrivalSensitivity);
  EXPECT_GE(r.max_distance, 2);
  EXPECT_EQ(DerivedDistance(FirstArrivalMapping(r.witness_a),
                            FirstArrivalMapping(r.witness_b)),
            r.max_distance);
}

TEST(MappingSensitivityTest, BudgetGuard) {
  EXPECT_THROW(MappingSensitivity(IdentityMapping, 3, 12,
                                  NeighborRelation::kSubstitution, 1000),
               ResourceError);
  EXPECT_THROW(MappingSensitivity(IdentityMapping, 0, 2), ConfigError);
}

}  // namespace
}  // namespace dpstream
