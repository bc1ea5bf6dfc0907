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

// Event and stream model, exact oracles, stream files and synthetic
// generators. Everything here is non-private; the mechanisms are tested
// against these functions.

#ifndef DPSTREAM_STREAM_H_
#define DPSTREAM_STREAM_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dpstream {

enum class StreamMode { kElements, kIntegers };

std::string_view ModeName(StreamMode mode);
StreamMode ParseMode(std::string_view name);

// One timestamp's input: a universe element, the empty symbol, or a signed
// integer (summing streams only).
class StreamEvent {
 public:
  enum class Kind : uint8_t { kElement, kEmpty, kInteger };

  constexpr StreamEvent() = default;

  static constexpr StreamEvent Element(uint64_t id) {
    return StreamEvent(Kind::kElement, id);
  }
  static constexpr StreamEvent Empty() { return StreamEvent(); }
  static constexpr StreamEvent Integer(int64_t value) {
    return StreamEvent(Kind::kInteger, static_cast<uint64_t>(value));
  }

  constexpr Kind kind() const { return kind_; }
  constexpr bool is_element() const { return kind_ == Kind::kElement; }
  constexpr bool is_empty() const { return kind_ == Kind::kEmpty; }
  constexpr bool is_integer() const { return kind_ == Kind::kInteger; }

  // Only meaningful when is_element().
  constexpr uint64_t element() const { return bits_; }
  // Only meaningful when is_integer().
  constexpr int64_t integer() const { return static_cast<int64_t>(bits_); }

  // Value seen by a summing mechanism: elements count 1, the empty symbol 0.
  constexpr int64_t SumValue() const {
    switch (kind_) {
      case Kind::kElement:
        return 1;
      case Kind::kEmpty:
        return 0;
      case Kind::kInteger:
        return integer();
    }
    return 0;
  }

  friend constexpr bool operator==(const StreamEvent&,
                                   const StreamEvent&) = default;

 private:
  constexpr StreamEvent(Kind kind, uint64_t bits) : kind_(kind), bits_(bits) {}

  Kind kind_ = Kind::kEmpty;
  uint64_t bits_ = 0;
};

using Stream = std::vector<StreamEvent>;
using StreamView = std::span<const StreamEvent>;

struct StreamConfig {
  int64_t T = 1;
  uint64_t n = 1;
  StreamMode mode = StreamMode::kElements;

  // Throws ConfigError unless T >= 1 and n >= 1.
  void Validate() const;
};

// Checks that the stream fits `config`: length <= T, element ids < n, and
// event kinds consistent with the mode. Throws ModeError / DomainError /
// ShapeError.
void ValidateStream(StreamView stream, const StreamConfig& config);

struct WindowSpec {
  int64_t W = 1;

  void Validate(int64_t T) const;
};

// Element counts of a prefix. Only elements with a positive count are stored.
class FrequencyTable {
 public:
  void Add(uint64_t id, int64_t count = 1);
  int64_t Count(uint64_t id) const;

  int64_t total_nonempty() const { return total_; }
  size_t distinct() const { return counts_.size(); }
  const std::unordered_map<uint64_t, int64_t>& counts() const {
    return counts_;
  }

  // (id, count) pairs sorted by id.
  std::vector<std::pair<uint64_t, int64_t>> Sorted() const;

 private:
  std::unordered_map<uint64_t, int64_t> counts_;
  int64_t total_ = 0;
};

FrequencyTable ExactFrequencies(StreamView prefix);

// Sum of f_a^p over present elements; p = 0 gives the distinct count.
double ExactLpMoment(const FrequencyTable& table, double p);

// Ids with f_a^p >= F_p / k, sorted ascending.
std::vector<uint64_t> ExactHeavyHitters(const FrequencyTable& table, double p,
                                        int64_t k);

// Positions max(t-W+1, 1)..t (1-based t).
StreamView WindowView(StreamView stream, int64_t t, WindowSpec window);

// Substitution count in element mode; total unit steps in integer mode.
int64_t StreamDistance(StreamView a, StreamView b);

// Running sums of SumValue() and running distinct counts, one entry per t.
std::vector<int64_t> ExactPrefixSums(StreamView stream);
std::vector<int64_t> ExactDistinctCounts(StreamView stream);

// Synthetic streams.
struct GeneratorSpec {
  enum class Kind {
    kUniform,
    kZipf,
    kPlantedHeavy,
    kAllDistinct,
    kBursty,
    kPoisson,
    kBernoulli,
  };

  Kind kind = Kind::kUniform;
  // Zipf exponent, planted fraction, Poisson mean or Bernoulli probability.
  double param = 0.0;
  // Fraction of timestamps carrying the empty symbol (element mode only).
  double empty_fraction = 0.0;

  // Accepts "uniform", "zipf:1.2", "planted_heavy:0.6", "all_distinct",
  // "bursty", "poisson:5", "bernoulli:0.3", optionally followed by
  // ",empty=0.1".
  static GeneratorSpec Parse(std::string_view text);
  std::string ToString() const;
  bool integer_kind() const {
    return kind == Kind::kPoisson || kind == Kind::kBernoulli;
  }
};

// Exactly config.T events; deterministic in `seed`. In planted_heavy streams
// the planted element is id 0.
Stream GenerateStream(const GeneratorSpec& spec, const StreamConfig& config,
                      uint64_t seed);

// Stream files: one token per line, "_" for the empty symbol, an optional
// "#T=<int> n=<int> mode=<elements|integers>" header.
struct StreamFile {
  Stream events;
  StreamConfig config;
  bool had_header = false;
};

// `mode_hint` resolves files without a header; when both are present they
// must agree.
StreamFile ReadStream(std::istream& in,
                      std::optional<StreamMode> mode_hint = std::nullopt);
StreamFile ReadStreamFile(const std::string& path,
                          std::optional<StreamMode> mode_hint = std::nullopt);
void WriteStream(std::ostream& out, StreamView stream,
                 const StreamConfig& config);
void WriteStreamFile(const std::string& path, StreamView stream,
                     const StreamConfig& config);

}  // namespace dpstream

#endif  // DPSTREAM_STREAM_H_
