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

// Seeded randomness shared by every mechanism: a counter-based noise source,
// polynomial k-wise independent hashing over the Mersenne prime 2^61 - 1,
// geometric level and sign hashes, and the median booster.

#ifndef DPSTREAM_RANDOM_H_
#define DPSTREAM_RANDOM_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace dpstream {

inline constexpr uint64_t kMersenne61 = (uint64_t{1} << 61) - 1;

// SplitMix64 finalizer.
uint64_t Mix64(uint64_t x);
uint64_t HashCombine(uint64_t seed, uint64_t value);

// Inverse-CDF Laplace sample for a uniform u in (0, 1).
double LaplaceFromUniform(double u, double scale);

// Seeded source of all randomness. Sequential draws advance a counter, so a
// context replayed from the same seed yields the same draws. Keyed draws are
// stateless functions of (seed, key) and are used for lazily materialized
// noise such as tree nodes.
//
// noise_off zeroes Laplace draws only; hash coefficients are still random so
// the deterministic skeleton of a mechanism is exercised unchanged.
class NoiseContext {
 public:
  explicit NoiseContext(uint64_t master_seed, bool noise_off = false)
      : master_seed_(master_seed), noise_off_(noise_off) {}

  uint64_t master_seed() const { return master_seed_; }
  bool noise_off() const { return noise_off_; }
  uint64_t draw_counter() const { return counter_; }

  uint64_t NextU64();
  // Uniform in the open interval (0, 1).
  double NextUniform();
  // One Laplace(scale) draw; exactly 0 when noise is off. Throws DomainError
  // for a non-positive or non-finite scale.
  double Laplace(double scale);
  double KeyedLaplace(uint64_t key, double scale) const;

  // Independent child context.
  NoiseContext Derive(uint64_t label) const;

 private:
  uint64_t master_seed_;
  bool noise_off_;
  uint64_t counter_ = 0;
};

// Degree-(k-1) polynomial with random coefficients over GF(2^61 - 1), reduced
// into [0, range). Any k distinct inputs below 2^61 - 1 hash k-wise
// independently up to the reduction bias.
class PolyHash {
 public:
  PolyHash() = default;
  PolyHash(int independence, uint64_t range, NoiseContext& ctx);
  // Explicit coefficients, lowest degree first. Used by snapshots and tests.
  PolyHash(std::vector<uint64_t> coefficients, uint64_t range);

  uint64_t operator()(uint64_t x) const;
  // The field value before range reduction.
  uint64_t FieldValue(uint64_t x) const;

  int independence() const { return static_cast<int>(coeffs_.size()); }
  uint64_t range() const { return range_; }
  const std::vector<uint64_t>& coefficients() const { return coeffs_; }

 private:
  std::vector<uint64_t> coeffs_;
  uint64_t range_ = 1;
};

// Level of an element: i in 1..L with probability 2^-i, or none (the empty
// level) with probability 2^-L. Computed as 1 + the number of trailing zeros
// of a uniform value in [0, 2^L); the value 0 maps to none.
class GeometricLevelHash {
 public:
  GeometricLevelHash() = default;
  GeometricLevelHash(int levels, int independence, NoiseContext& ctx);

  std::optional<int> Level(uint64_t x) const;
  int levels() const { return levels_; }
  const PolyHash& base() const { return base_; }

 private:
  int levels_ = 0;
  PolyHash base_;
};

// 4-wise independent map to {-1, +1}.
class SignHash {
 public:
  SignHash() = default;
  explicit SignHash(NoiseContext& ctx);
  explicit SignHash(PolyHash base);

  int operator()(uint64_t x) const { return base_(x) == 1 ? 1 : -1; }
  const PolyHash& base() const { return base_; }

 private:
  PolyHash base_;
};

// Lower median: element floor((len-1)/2) of the sorted values.
double MedianBoost(std::span<const double> values);

// ceil(50 ln(1/xi)) for xi in (0, 0.5).
int64_t BoostCount(double xi);

// ceil(50 * log_value) with a guard against representation error pushing an
// exact integer up by one. Used for copy counts of the form
// ceil(50 ln(something)).
int64_t FiftyLogCopies(double log_value);

// Smallest even integer >= max(x, 4).
int RoundUpEvenAtLeast4(double x);

// ceil(log2(x)) for x >= 1 (0 for x == 1).
int CeilLog2(uint64_t x);

}  // namespace dpstream

#endif  // DPSTREAM_RANDOM_H_
