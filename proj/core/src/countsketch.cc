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

#include "dpstream/countsketch.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "dpstream/errors.h"

namespace dpstream {

namespace {

constexpr uint64_t kNoiseLabel = 0x6e6f697365ULL;
constexpr char kSnapshotMagic[5] = {'D', 'P', 'C', 'S', '1'};
// Evaluating F2 with noise touches every bucket; beyond this it is refused.
constexpr uint64_t kMaxDenseBuckets = uint64_t{1} << 26;

BucketRouter DrawRouter(uint64_t buckets, NoiseContext& ctx) {
  return BucketRouter(buckets, ctx);
}

// Little-endian primitives.
void PutU64(std::ostream& out, uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}
void PutU32(std::ostream& out, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}
void PutU8(std::ostream& out, uint8_t v) { out.put(static_cast<char>(v)); }
void PutF64(std::ostream& out, double v) { PutU64(out, std::bit_cast<uint64_t>(v)); }
void PutI64(std::ostream& out, int64_t v) { PutU64(out, static_cast<uint64_t>(v)); }

uint64_t GetU64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) {
    throw ParseError("truncated sketch snapshot");
  }
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}
uint32_t GetU32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw ParseError("truncated sketch snapshot");
  }
  uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}
uint8_t GetU8(std::istream& in) {
  const int c = in.get();
  if (c == std::char_traits<char>::eof()) {
    throw ParseError("truncated sketch snapshot");
  }
  return static_cast<uint8_t>(c);
}
double GetF64(std::istream& in) { return std::bit_cast<double>(GetU64(in)); }
int64_t GetI64(std::istream& in) { return static_cast<int64_t>(GetU64(in)); }

void PutCoefficients(std::ostream& out, const PolyHash& h) {
  PutU32(out, static_cast<uint32_t>(h.coefficients().size()));
  for (uint64_t c : h.coefficients()) PutU64(out, c);
}

std::vector<uint64_t> GetCoefficients(std::istream& in) {
  const uint32_t count = GetU32(in);
  if (count == 0 || count > 64) throw ParseError("bad hash coefficient count");
  std::vector<uint64_t> c(count);
  for (uint64_t& v : c) {
    v = GetU64(in);
    if (v >= kMersenne61) throw ParseError("hash coefficient outside field");
  }
  return c;
}

}  // namespace

BucketRouter::BucketRouter(uint64_t buckets, NoiseContext& ctx)
    : h_(4, buckets, ctx), g_(ctx) {}

BucketRouter::BucketRouter(PolyHash bucket_hash, SignHash sign_hash)
    : h_(std::move(bucket_hash)), g_(std::move(sign_hash)) {}

std::optional<BucketRouter::Route> BucketRouter::operator()(
    const StreamEvent& event) const {
  if (!event.is_element()) return std::nullopt;
  return RouteElement(event.element());
}

DerivedTuple BucketMapping(const BucketRouter& router, StreamView stream) {
  DerivedTuple out(static_cast<size_t>(router.buckets()));
  for (DerivedStream& d : out) d.values.assign(stream.size(), 0);
  for (size_t t = 0; t < stream.size(); ++t) {
    if (auto r = router(stream[t])) out[r->bucket].values[t] = r->sign;
  }
  return out;
}

void CountSketchParams::Validate() const {
  if (buckets < 1 || buckets > kMersenne61) {
    throw ConfigError("bucket count must lie in [1, 2^61 - 1]");
  }
  TreeParams{horizon, epsilon, xi}.Validate();
}

CountSketch::CountSketch(CountSketchParams params, NoiseContext ctx)
    : params_(params),
      router_(DrawRouter((params.Validate(), params.buckets), ctx)),
      bank_(params.buckets, {params.horizon, params.epsilon, params.xi},
            ctx.Derive(kNoiseLabel)) {}

CountSketch::CountSketch(CountSketchParams params, BucketRouter router,
                         NoiseContext noise_ctx)
    : params_(params),
      router_(std::move(router)),
      bank_(params.buckets, {params.horizon, params.epsilon, params.xi},
            noise_ctx) {
  params_.Validate();
  if (router_.buckets() != params_.buckets) {
    throw ConfigError("router bucket count differs from the parameters");
  }
}

void CountSketch::Observe(const StreamEvent& event) {
  if (event.is_integer()) throw ModeError("CountSketch needs element events");
  bank_.Advance();
  if (auto r = router_(event)) {
    const int64_t before = bank_.exact(r->bucket);
    bank_.Add(r->bucket, r->sign);
    exact_f2_ += 2 * before * r->sign + 1;
  }
}

void CountSketch::AdvanceTo(int64_t t) { bank_.AdvanceTo(t); }

std::vector<double> CountSketch::Buckets() const {
  if (params_.buckets > kMaxDenseBuckets) {
    throw ResourceError("too many buckets to materialize");
  }
  std::vector<double> z(static_cast<size_t>(params_.buckets));
  for (uint64_t i = 0; i < params_.buckets; ++i) z[i] = bank_.Estimate(i);
  return z;
}

double CountSketch::PointQuery(uint64_t a) const {
  const BucketRouter::Route r = router_.RouteElement(a);
  return r.sign * bank_.Estimate(r.bucket);
}

double CountSketch::gamma() const {
  return BinaryTreeMechanism::ErrorBound(params_.horizon, params_.epsilon,
                                         params_.xi);
}

F2Estimate CountSketch::F2() const {
  F2Estimate est;
  const double k = static_cast<double>(params_.buckets);
  est.eta = 20.0 / std::sqrt(k);
  const double g = gamma();
  est.additive = 4.0 * k * g * g / est.eta;
  if (bank_.context().noise_off()) {
    est.value = static_cast<double>(exact_f2_);
    return est;
  }
  if (params_.buckets > kMaxDenseBuckets) {
    throw ResourceError("noisy F2 over more than 2^26 buckets");
  }
  double sum = 0.0;
  for (uint64_t i = 0; i < params_.buckets; ++i) {
    const double z = bank_.Estimate(i);
    sum += z * z;
  }
  est.value = sum;
  return est;
}

void CountSketch::WriteSnapshot(std::ostream& out) const {
  PutU64(out, params_.buckets);
  PutI64(out, params_.horizon);
  PutF64(out, params_.epsilon);
  PutF64(out, params_.xi);
  PutU64(out, bank_.context().master_seed());
  PutU8(out, bank_.context().noise_off() ? 1 : 0);
  PutCoefficients(out, router_.bucket_hash());
  PutCoefficients(out, router_.sign_hash().base());
  PutI64(out, bank_.time());
  std::vector<std::pair<uint64_t, int64_t>> sums(bank_.nonzero().begin(),
                                                 bank_.nonzero().end());
  std::sort(sums.begin(), sums.end());
  PutU64(out, sums.size());
  for (const auto& [bucket, value] : sums) {
    PutU64(out, bucket);
    PutI64(out, value);
  }
}

CountSketch CountSketch::ReadSnapshot(std::istream& in) {
  CountSketchParams params;
  params.buckets = GetU64(in);
  params.horizon = GetI64(in);
  params.epsilon = GetF64(in);
  params.xi = GetF64(in);
  const uint64_t seed = GetU64(in);
  const uint8_t noise_off = GetU8(in);
  if (noise_off > 1) throw ParseError("bad noise flag in snapshot");
  try {
    params.Validate();
  } catch (const ConfigError& e) {
    throw ParseError(std::string("invalid sketch parameters: ") + e.what());
  }
  PolyHash h(GetCoefficients(in), params.buckets);
  SignHash g(PolyHash(GetCoefficients(in), 2));
  CountSketch sketch(params, BucketRouter(std::move(h), std::move(g)),
                     NoiseContext(seed, noise_off == 1));
  const int64_t t = GetI64(in);
  const uint64_t nnz = GetU64(in);
  if (nnz > params.buckets || nnz > (uint64_t{1} << 32)) {
    throw ParseError("bad bucket count in snapshot");
  }
  std::unordered_map<uint64_t, int64_t> sums;
  int64_t f2 = 0;
  for (uint64_t i = 0; i < nnz; ++i) {
    const uint64_t bucket = GetU64(in);
    const int64_t value = GetI64(in);
    sums[bucket] = value;
    f2 += value * value;
  }
  try {
    sketch.bank_.Restore(t, std::move(sums));
  } catch (const StateError& e) {
    throw ParseError(std::string("invalid sketch state: ") + e.what());
  }
  sketch.exact_f2_ = f2;
  return sketch;
}

void L2Config::Validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("epsilon must be positive and finite");
  }
  if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("eta must lie in (0, 1)");
  if (!(xi > 0.0 && xi < 0.5)) throw ConfigError("xi must lie in (0, 0.5)");
  if (n < 1 || T < 1) throw ConfigError("n and T must be >= 1");
}

L2Plan PlanL2(const L2Config& config) {
  config.Validate();
  L2Plan plan;
  plan.config = config;
  plan.theory_copies = FiftyLogCopies(
      std::log(2.0 * static_cast<double>(config.T) / config.xi) +
      std::log(static_cast<double>(config.n)));
  plan.copies = config.caps.Copies(plan.theory_copies);
  plan.theory_buckets = ClampHashRange(400.0 / (config.eta * config.eta));
  plan.buckets = config.caps.Buckets(plan.theory_buckets);
  plan.tree_epsilon = config.epsilon / (2.0 * static_cast<double>(plan.copies));
  // Half of xi covers all bucket trees of all theoretical copies; the other
  // half covers the median.
  plan.tree_xi = (config.xi / 2.0) /
                 (static_cast<double>(plan.theory_copies) *
                  static_cast<double>(plan.buckets));
  plan.budget = MechanismBudget(config.epsilon, config.xi);
  plan.budget.ChargeEach("sketch", plan.copies, 2.0 * plan.tree_epsilon,
                         static_cast<double>(plan.buckets) * plan.tree_xi);
  plan.budget.Charge("median", 0.0, config.xi / 2.0);
  return plan;
}

L2Estimator::L2Estimator(const L2Plan& plan, NoiseContext ctx) {
  sketches_.reserve(static_cast<size_t>(plan.copies));
  for (int64_t i = 0; i < plan.copies; ++i) {
    sketches_.emplace_back(plan.sketch_params(),
                           ctx.Derive(static_cast<uint64_t>(i)));
  }
}

L2Estimator::L2Estimator(std::vector<CountSketch> sketches)
    : sketches_(std::move(sketches)) {
  if (sketches_.empty()) throw ConfigError("estimator needs >= 1 sketch");
}

void L2Estimator::Observe(const StreamEvent& event) {
  for (CountSketch& s : sketches_) s.Observe(event);
}

void L2Estimator::AdvanceTo(int64_t t) {
  for (CountSketch& s : sketches_) s.AdvanceTo(t);
}

double L2Estimator::PointQuery(uint64_t a) const {
  std::vector<double> v;
  v.reserve(sketches_.size());
  for (const CountSketch& s : sketches_) v.push_back(s.PointQuery(a));
  return MedianBoost(v);
}

double L2Estimator::F2() const {
  std::vector<double> v;
  v.reserve(sketches_.size());
  for (const CountSketch& s : sketches_) v.push_back(s.F2().value);
  return MedianBoost(v);
}

void L2Estimator::WriteSnapshot(std::ostream& out) const {
  out.write(kSnapshotMagic, sizeof(kSnapshotMagic));
  PutU32(out, static_cast<uint32_t>(sketches_.size()));
  for (const CountSketch& s : sketches_) s.WriteSnapshot(out);
}

L2Estimator L2Estimator::ReadSnapshot(std::istream& in) {
  char magic[sizeof(kSnapshotMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kSnapshotMagic, sizeof(magic)) != 0) {
    throw ParseError("not a DPCS1 sketch snapshot");
  }
  const uint32_t copies = GetU32(in);
  if (copies == 0) throw ParseError("snapshot holds no sketches");
  std::vector<CountSketch> sketches;
  sketches.reserve(copies);
  for (uint32_t i = 0; i < copies; ++i) {
    sketches.push_back(CountSketch::ReadSnapshot(in));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ParseError("trailing bytes after sketch snapshot");
  }
  return L2Estimator(std::move(sketches));
}

void L2Estimator::WriteSnapshotFile(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  WriteSnapshot(out);
  out.flush();
  if (!out) throw IoError("write failure on '" + path + "'");
}

L2Estimator L2Estimator::ReadSnapshotFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open snapshot '" + path + "'");
  try {
    return ReadSnapshot(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace dpstream
