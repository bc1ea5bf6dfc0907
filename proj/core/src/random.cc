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

#include "dpstream/random.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "dpstream/errors.h"

namespace dpstream {

namespace {

__extension__ typedef unsigned __int128 Uint128;

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
// Domain separators so sequential, keyed and derived streams never overlap.
constexpr uint64_t kKeyedDomain = 0x6b657965644c6170ULL;
constexpr uint64_t kDeriveDomain = 0x6465726976656421ULL;

double ToOpenUnit(uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

uint64_t MulMod61(uint64_t a, uint64_t b) {
  const Uint128 prod = static_cast<Uint128>(a) * b;
  uint64_t lo = static_cast<uint64_t>(prod) & kMersenne61;
  uint64_t hi = static_cast<uint64_t>(prod >> 61);
  uint64_t r = lo + hi;
  if (r >= kMersenne61) r -= kMersenne61;
  return r;
}

uint64_t AddMod61(uint64_t a, uint64_t b) {
  uint64_t r = a + b;
  if (r >= kMersenne61) r -= kMersenne61;
  return r;
}

uint64_t Reduce61(uint64_t x) {
  uint64_t r = (x & kMersenne61) + (x >> 61);
  if (r >= kMersenne61) r -= kMersenne61;
  return r;
}

}  // namespace

uint64_t Mix64(uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t HashCombine(uint64_t seed, uint64_t value) {
  return Mix64(seed ^ Mix64(value + 0x632be59bd9b4e019ULL));
}

double LaplaceFromUniform(double u, double scale) {
  const double x = u - 0.5;
  const double mag = -scale * std::log1p(-2.0 * std::fabs(x));
  return x < 0 ? -mag : mag;
}

uint64_t NoiseContext::NextU64() {
  const uint64_t c = counter_++;
  return Mix64(master_seed_ ^ Mix64(c * kGolden + 1));
}

double NoiseContext::NextUniform() { return ToOpenUnit(NextU64()); }

namespace {

void CheckScale(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw DomainError("Laplace scale must be positive and finite, got " +
                      std::to_string(scale));
  }
}

}  // namespace

double NoiseContext::Laplace(double scale) {
  CheckScale(scale);
  const double u = NextUniform();
  if (noise_off_) return 0.0;
  return LaplaceFromUniform(u, scale);
}

double NoiseContext::KeyedLaplace(uint64_t key, double scale) const {
  CheckScale(scale);
  if (noise_off_) return 0.0;
  const uint64_t bits = Mix64(master_seed_ ^ kKeyedDomain ^ Mix64(key));
  return LaplaceFromUniform(ToOpenUnit(bits), scale);
}

NoiseContext NoiseContext::Derive(uint64_t label) const {
  return NoiseContext(Mix64(master_seed_ ^ kDeriveDomain ^ Mix64(label)),
                      noise_off_);
}

PolyHash::PolyHash(int independence, uint64_t range, NoiseContext& ctx)
    : range_(range) {
  if (independence < 1) throw DomainError("hash independence must be >= 1");
  if (range < 1 || range > kMersenne61) {
    throw DomainError("hash range must lie in [1, 2^61 - 1]");
  }
  coeffs_.reserve(static_cast<size_t>(independence));
  for (int i = 0; i < independence; ++i) {
    coeffs_.push_back(Reduce61(ctx.NextU64()));
  }
}

PolyHash::PolyHash(std::vector<uint64_t> coefficients, uint64_t range)
    : coeffs_(std::move(coefficients)), range_(range) {
  if (coeffs_.empty()) throw DomainError("hash needs coefficients");
  if (range < 1 || range > kMersenne61) {
    throw DomainError("hash range must lie in [1, 2^61 - 1]");
  }
  for (uint64_t& c : coeffs_) c = Reduce61(c);
}

uint64_t PolyHash::FieldValue(uint64_t x) const {
  const uint64_t v = Reduce61(x);
  uint64_t acc = 0;
  for (size_t i = coeffs_.size(); i-- > 0;) {
    acc = AddMod61(MulMod61(acc, v), coeffs_[i]);
  }
  return acc;
}

uint64_t PolyHash::operator()(uint64_t x) const {
  return FieldValue(x) % range_;
}

GeometricLevelHash::GeometricLevelHash(int levels, int independence,
                                       NoiseContext& ctx)
    : levels_(levels) {
  if (levels < 1 || levels > 60) {
    throw DomainError("level count must lie in [1, 60]");
  }
  base_ = PolyHash(independence, uint64_t{1} << levels, ctx);
}

std::optional<int> GeometricLevelHash::Level(uint64_t x) const {
  const uint64_t v = base_(x);
  if (v == 0) return std::nullopt;
  return 1 + std::countr_zero(v);
}

SignHash::SignHash(NoiseContext& ctx) : base_(4, 2, ctx) {}

SignHash::SignHash(PolyHash base) : base_(std::move(base)) {
  if (base_.range() != 2) throw DomainError("sign hash needs range 2");
}

double MedianBoost(std::span<const double> values) {
  if (values.empty()) throw DomainError("median of an empty sequence");
  std::vector<double> v(values.begin(), values.end());
  const size_t mid = (v.size() - 1) / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<ptrdiff_t>(mid),
                   v.end());
  return v[mid];
}

int64_t FiftyLogCopies(double log_value) {
  if (!(log_value > 0.0) || !std::isfinite(log_value)) {
    throw DomainError("copy count needs a positive finite logarithm");
  }
  return static_cast<int64_t>(std::ceil(50.0 * log_value - 1e-9));
}

int64_t BoostCount(double xi) {
  if (!(xi > 0.0 && xi < 0.5)) {
    throw DomainError("boost_count needs xi in (0, 0.5)");
  }
  return FiftyLogCopies(std::log(1.0 / xi));
}

int RoundUpEvenAtLeast4(double x) {
  if (!std::isfinite(x)) throw DomainError("non-finite independence");
  int v = static_cast<int>(std::ceil(std::max(x, 4.0) - 1e-9));
  if (v % 2 != 0) ++v;
  return v;
}

int CeilLog2(uint64_t x) {
  if (x == 0) throw DomainError("log of zero");
  if (x == 1) return 0;
  return 64 - std::countl_zero(x - 1);
}

}  // namespace dpstream
