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

#include <cmath>
#include <string>

#include "dpstream/errors.h"

namespace dpstream {

int64_t DerivedDistance(const DerivedTuple& a, const DerivedTuple& b) {
  if (a.size() != b.size()) throw ShapeError("derived tuples differ in arity");
  int64_t total = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const DerivedStream& x = a[i];
    const DerivedStream& y = b[i];
    if (x.kind != y.kind || x.values.size() != y.values.size()) {
      throw ShapeError("derived streams differ in kind or length");
    }
    for (size_t t = 0; t < x.values.size(); ++t) {
      const int64_t u = x.values[t];
      const int64_t v = y.values[t];
      if (x.kind == DerivedStream::Kind::kCounts) {
        total += u > v ? u - v : v - u;
      } else if (u != v) {
        ++total;
      }
    }
  }
  return total;
}

double EnumerationCost(uint64_t n, int64_t T, NeighborRelation relation) {
  const double streams = std::pow(static_cast<double>(n + 1),
                                  static_cast<double>(T));
  // Each unordered pair is visited once.
  const double per_position = relation == NeighborRelation::kSubstitution
                                  ? static_cast<double>(n) / 2.0
                                  : static_cast<double>(n) /
                                        static_cast<double>(n + 1);
  return streams * static_cast<double>(T) * per_position;
}

namespace {

// Symbol 0 is the empty event, symbol s > 0 is element s - 1.
StreamEvent Decode(uint64_t symbol) {
  return symbol == 0 ? StreamEvent::Empty() : StreamEvent::Element(symbol - 1);
}

Stream DecodeStream(uint64_t index, uint64_t base, int64_t T) {
  Stream s(static_cast<size_t>(T));
  for (int64_t t = 0; t < T; ++t) {
    s[t] = Decode(index % base);
    index /= base;
  }
  return s;
}

}  // namespace

SensitivityReport MappingSensitivity(const StreamMapping& mapping, uint64_t n,
                                     int64_t T, NeighborRelation relation,
                                     int64_t budget) {
  if (n < 1 || T < 1) throw ConfigError("sensitivity check needs n, T >= 1");
  const double cost = EnumerationCost(n, T, relation);
  if (cost > static_cast<double>(budget)) {
    throw ResourceError("sensitivity enumeration needs about " +
                        std::to_string(static_cast<int64_t>(cost)) +
                        " comparisons, budget is " + std::to_string(budget));
  }
  const uint64_t base = n + 1;
  uint64_t count = 1;
  for (int64_t t = 0; t < T; ++t) count *= base;

  std::vector<DerivedTuple> mapped;
  mapped.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    const Stream s = DecodeStream(i, base, T);
    mapped.push_back(mapping(s));
  }

  SensitivityReport report;
  uint64_t best_a = 0, best_b = 0;
  bool any = false;
  for (uint64_t i = 0; i < count; ++i) {
    uint64_t rest = i;
    uint64_t place = 1;
    for (int64_t t = 0; t < T; ++t) {
      const uint64_t sym = rest % base;
      rest /= base;
      for (uint64_t other = sym + 1; other < base; ++other) {
        if (relation == NeighborRelation::kEmptyReplacement && sym != 0) break;
        const uint64_t j = i + (other - sym) * place;
        const int64_t d = DerivedDistance(mapped[i], mapped[j]);
        ++report.pairs_checked;
        if (!any || d > report.max_distance) {
          report.max_distance = d;
          best_a = i;
          best_b = j;
          any = true;
        }
      }
      place *= base;
    }
  }
  if (any) {
    report.witness_a = DecodeStream(best_a, base, T);
    report.witness_b = DecodeStream(best_b, base, T);
  }
  return report;
}

DerivedTuple IdentityMapping(StreamView stream) {
  DerivedStream out;
  out.kind = DerivedStream::Kind::kSymbols;
  out.values.reserve(stream.size());
  for (const StreamEvent& e : stream) {
    out.values.push_back(e.is_element() ? static_cast<int64_t>(e.element())
                                        : kEmptySymbol);
  }
  return {out};
}

}  // namespace dpstream
