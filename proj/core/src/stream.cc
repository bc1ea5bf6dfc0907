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

#include "dpstream/stream.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <unordered_set>

#include "dpstream/errors.h"

namespace dpstream {

std::string_view ModeName(StreamMode mode) {
  return mode == StreamMode::kElements ? "elements" : "integers";
}

StreamMode ParseMode(std::string_view name) {
  if (name == "elements") return StreamMode::kElements;
  if (name == "integers") return StreamMode::kIntegers;
  throw ConfigError("unknown stream mode '" + std::string(name) + "'");
}

void StreamConfig::Validate() const {
  if (T < 1) throw ConfigError("T must be >= 1");
  if (n < 1) throw ConfigError("n must be >= 1");
}

void ValidateStream(StreamView stream, const StreamConfig& config) {
  config.Validate();
  if (static_cast<int64_t>(stream.size()) > config.T) {
    throw ShapeError("stream length " + std::to_string(stream.size()) +
                     " exceeds T=" + std::to_string(config.T));
  }
  for (const StreamEvent& e : stream) {
    if (config.mode == StreamMode::kElements) {
      if (e.is_integer()) {
        throw ModeError("integer event in an element-mode stream");
      }
      if (e.is_element() && e.element() >= config.n) {
        throw DomainError("element id " + std::to_string(e.element()) +
                          " outside universe of size " +
                          std::to_string(config.n));
      }
    } else if (!e.is_integer()) {
      throw ModeError("element or empty event in an integer-mode stream");
    }
  }
}

void WindowSpec::Validate(int64_t T) const {
  if (W < 1 || W > T) {
    throw ConfigError("window length must satisfy 1 <= W <= T");
  }
}

void FrequencyTable::Add(uint64_t id, int64_t count) {
  if (count < 0) throw DomainError("negative frequency increment");
  if (count == 0) return;
  counts_[id] += count;
  total_ += count;
}

int64_t FrequencyTable::Count(uint64_t id) const {
  auto it = counts_.find(id);
  return it == counts_.end() ? 0 : it->second;
}

std::vector<std::pair<uint64_t, int64_t>> FrequencyTable::Sorted() const {
  std::vector<std::pair<uint64_t, int64_t>> out(counts_.begin(),
                                                counts_.end());
  std::sort(out.begin(), out.end());
  return out;
}

FrequencyTable ExactFrequencies(StreamView prefix) {
  FrequencyTable table;
  for (const StreamEvent& e : prefix) {
    if (e.is_integer()) {
      throw ModeError("frequencies are defined for element streams only");
    }
    if (e.is_element()) table.Add(e.element());
  }
  return table;
}

double ExactLpMoment(const FrequencyTable& table, double p) {
  if (!(p >= 0.0)) throw DomainError("moment order p must be >= 0");
  if (p == 0.0) return static_cast<double>(table.distinct());
  if (p == 1.0) return static_cast<double>(table.total_nonempty());
  double sum = 0.0;
  for (const auto& [id, count] : table.Sorted()) {
    sum += std::pow(static_cast<double>(count), p);
  }
  return sum;
}

std::vector<uint64_t> ExactHeavyHitters(const FrequencyTable& table, double p,
                                        int64_t k) {
  if (k < 1) throw DomainError("heavy-hitter parameter k must be >= 1");
  if (!(p >= 0.0)) throw DomainError("moment order p must be >= 0");
  const double total = ExactLpMoment(table, p);
  std::vector<uint64_t> out;
  for (const auto& [id, count] : table.Sorted()) {
    const double mass = std::pow(static_cast<double>(count), p);
    if (mass * static_cast<double>(k) >= total) out.push_back(id);
  }
  return out;
}

StreamView WindowView(StreamView stream, int64_t t, WindowSpec window) {
  if (t < 1 || t > static_cast<int64_t>(stream.size())) {
    throw IndexError("timestamp " + std::to_string(t) + " outside [1, " +
                     std::to_string(stream.size()) + "]");
  }
  if (window.W < 1) throw ConfigError("window length must be >= 1");
  const int64_t start = std::max<int64_t>(t - window.W + 1, 1);
  return stream.subspan(static_cast<size_t>(start - 1),
                        static_cast<size_t>(t - start + 1));
}

int64_t StreamDistance(StreamView a, StreamView b) {
  if (a.size() != b.size()) {
    throw ShapeError("stream distance needs equal lengths");
  }
  int64_t d = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const bool ia = a[i].is_integer();
    const bool ib = b[i].is_integer();
    if (ia != ib) throw ModeError("stream distance across modes");
    if (ia) {
      const int64_t x = a[i].integer();
      const int64_t y = b[i].integer();
      d += x > y ? x - y : y - x;
    } else if (!(a[i] == b[i])) {
      ++d;
    }
  }
  return d;
}

std::vector<int64_t> ExactPrefixSums(StreamView stream) {
  std::vector<int64_t> out;
  out.reserve(stream.size());
  int64_t sum = 0;
  for (const StreamEvent& e : stream) {
    sum += e.SumValue();
    out.push_back(sum);
  }
  return out;
}

std::vector<int64_t> ExactDistinctCounts(StreamView stream) {
  std::vector<int64_t> out;
  out.reserve(stream.size());
  std::unordered_set<uint64_t> seen;
  for (const StreamEvent& e : stream) {
    if (e.is_integer()) throw ModeError("distinct count of an integer stream");
    if (e.is_element()) seen.insert(e.element());
    out.push_back(static_cast<int64_t>(seen.size()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generators

namespace {

struct KindName {
  GeneratorSpec::Kind kind;
  std::string_view name;
  bool has_param;
};

constexpr KindName kKindNames[] = {
    {GeneratorSpec::Kind::kUniform, "uniform", false},
    {GeneratorSpec::Kind::kZipf, "zipf", true},
    {GeneratorSpec::Kind::kPlantedHeavy, "planted_heavy", true},
    {GeneratorSpec::Kind::kAllDistinct, "all_distinct", false},
    {GeneratorSpec::Kind::kBursty, "bursty", false},
    {GeneratorSpec::Kind::kPoisson, "poisson", true},
    {GeneratorSpec::Kind::kBernoulli, "bernoulli", true},
};

double ParseDouble(std::string_view text, std::string_view what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("bad " + std::string(what) + " '" + std::string(text) +
                      "'");
  }
  return v;
}

std::string FormatParam(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// Positions 0..T-1 that carry the empty symbol.
std::vector<bool> EmptyMask(int64_t T, double fraction, std::mt19937_64& rng) {
  std::vector<bool> mask(static_cast<size_t>(T), false);
  if (fraction <= 0.0) return mask;
  std::bernoulli_distribution coin(fraction);
  for (int64_t t = 0; t < T; ++t) mask[t] = coin(rng);
  return mask;
}

class ZipfSampler {
 public:
  ZipfSampler(uint64_t n, double s) : cdf_(n) {
    if (n > (uint64_t{1} << 26)) {
      throw ConfigError("zipf generator supports n <= 2^26");
    }
    double acc = 0.0;
    for (uint64_t r = 0; r < n; ++r) {
      acc += std::pow(static_cast<double>(r + 1), -s);
      cdf_[r] = acc;
    }
    for (double& c : cdf_) c /= acc;
  }

  uint64_t operator()(std::mt19937_64& rng) const {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    return static_cast<uint64_t>(it - cdf_.begin());
  }

 private:
  std::vector<double> cdf_;
};

}  // namespace

GeneratorSpec GeneratorSpec::Parse(std::string_view text) {
  GeneratorSpec spec;
  std::string_view head = text;
  const size_t comma = text.find(',');
  if (comma != std::string_view::npos) {
    head = text.substr(0, comma);
    std::string_view rest = text.substr(comma + 1);
    constexpr std::string_view kEmpty = "empty=";
    if (rest.substr(0, kEmpty.size()) != kEmpty) {
      throw ConfigError("unknown generator option '" + std::string(rest) +
                        "'");
    }
    spec.empty_fraction =
        ParseDouble(rest.substr(kEmpty.size()), "empty fraction");
    if (spec.empty_fraction < 0.0 || spec.empty_fraction >= 1.0) {
      throw ConfigError("empty fraction must lie in [0, 1)");
    }
  }
  std::string_view name = head;
  std::string_view param;
  const size_t colon = head.find(':');
  if (colon != std::string_view::npos) {
    name = head.substr(0, colon);
    param = head.substr(colon + 1);
  }
  for (const KindName& kn : kKindNames) {
    if (kn.name != name) continue;
    spec.kind = kn.kind;
    if (kn.has_param) {
      if (param.empty()) {
        throw ConfigError("generator '" + std::string(name) +
                          "' needs a parameter");
      }
      spec.param = ParseDouble(param, "generator parameter");
    } else if (!param.empty()) {
      throw ConfigError("generator '" + std::string(name) +
                        "' takes no parameter");
    }
    return spec;
  }
  throw ConfigError("unknown generator '" + std::string(name) + "'");
}

std::string GeneratorSpec::ToString() const {
  std::string out;
  for (const KindName& kn : kKindNames) {
    if (kn.kind != kind) continue;
    out = std::string(kn.name);
    if (kn.has_param) out += ":" + FormatParam(param);
  }
  if (empty_fraction > 0.0) out += ",empty=" + FormatParam(empty_fraction);
  return out;
}

Stream GenerateStream(const GeneratorSpec& spec, const StreamConfig& config,
                      uint64_t seed) {
  config.Validate();
  const bool integer_mode = config.mode == StreamMode::kIntegers;
  if (spec.integer_kind() != integer_mode && spec.kind != GeneratorSpec::Kind::kUniform) {
    throw ConfigError("generator '" + spec.ToString() + "' does not produce " +
                      std::string(ModeName(config.mode)) + " streams");
  }
  std::mt19937_64 rng(seed);
  const int64_t T = config.T;
  const uint64_t n = config.n;
  Stream out;
  out.reserve(static_cast<size_t>(T));

  if (integer_mode) {
    switch (spec.kind) {
      case GeneratorSpec::Kind::kPoisson: {
        if (!(spec.param > 0.0)) throw ConfigError("poisson mean must be > 0");
        std::poisson_distribution<int64_t> dist(spec.param);
        for (int64_t t = 0; t < T; ++t) {
          out.push_back(StreamEvent::Integer(dist(rng)));
        }
        break;
      }
      case GeneratorSpec::Kind::kBernoulli: {
        if (!(spec.param >= 0.0 && spec.param <= 1.0)) {
          throw ConfigError("bernoulli probability must lie in [0, 1]");
        }
        std::bernoulli_distribution dist(spec.param);
        for (int64_t t = 0; t < T; ++t) {
          out.push_back(StreamEvent::Integer(dist(rng) ? 1 : 0));
        }
        break;
      }
      default: {
        std::uniform_int_distribution<uint64_t> dist(0, n - 1);
        for (int64_t t = 0; t < T; ++t) {
          out.push_back(StreamEvent::Integer(static_cast<int64_t>(dist(rng))));
        }
        break;
      }
    }
    return out;
  }

  const std::vector<bool> empty = EmptyMask(T, spec.empty_fraction, rng);
  int64_t nonempty = 0;
  for (bool b : empty) nonempty += b ? 0 : 1;
  std::uniform_int_distribution<uint64_t> uniform(0, n - 1);

  switch (spec.kind) {
    case GeneratorSpec::Kind::kUniform: {
      for (int64_t t = 0; t < T; ++t) {
        out.push_back(empty[t] ? StreamEvent::Empty()
                               : StreamEvent::Element(uniform(rng)));
      }
      break;
    }
    case GeneratorSpec::Kind::kZipf: {
      if (!(spec.param >= 0.0)) throw ConfigError("zipf exponent must be >= 0");
      ZipfSampler zipf(n, spec.param);
      for (int64_t t = 0; t < T; ++t) {
        out.push_back(empty[t] ? StreamEvent::Empty()
                               : StreamEvent::Element(zipf(rng)));
      }
      break;
    }
    case GeneratorSpec::Kind::kPlantedHeavy: {
      if (!(spec.param >= 0.0 && spec.param <= 1.0)) {
        throw ConfigError("planted fraction must lie in [0, 1]");
      }
      const int64_t planted =
          static_cast<int64_t>(std::llround(spec.param * nonempty));
      std::vector<bool> is_planted(static_cast<size_t>(nonempty), false);
      std::fill(is_planted.begin(), is_planted.begin() + planted, true);
      std::shuffle(is_planted.begin(), is_planted.end(), rng);
      if (n == 1 && planted < nonempty) {
        throw ConfigError("planted_heavy with n = 1 needs fraction 1");
      }
      std::uniform_int_distribution<uint64_t> others(1, n > 1 ? n - 1 : 1);
      int64_t slot = 0;
      for (int64_t t = 0; t < T; ++t) {
        if (empty[t]) {
          out.push_back(StreamEvent::Empty());
          continue;
        }
        out.push_back(is_planted[slot++] ? StreamEvent::Element(0)
                                         : StreamEvent::Element(others(rng)));
      }
      break;
    }
    case GeneratorSpec::Kind::kAllDistinct: {
      if (static_cast<uint64_t>(nonempty) > n) {
        throw ConfigError("all_distinct needs n >= number of non-empty slots");
      }
      // Floyd's sampling of `nonempty` distinct ids, then a shuffle.
      std::vector<uint64_t> ids;
      ids.reserve(static_cast<size_t>(nonempty));
      std::unordered_set<uint64_t> chosen;
      for (uint64_t j = n - static_cast<uint64_t>(nonempty); j < n; ++j) {
        const uint64_t r = std::uniform_int_distribution<uint64_t>(0, j)(rng);
        const uint64_t pick = chosen.insert(r).second ? r : j;
        if (pick == j) chosen.insert(j);
        ids.push_back(pick);
      }
      std::shuffle(ids.begin(), ids.end(), rng);
      size_t slot = 0;
      for (int64_t t = 0; t < T; ++t) {
        out.push_back(empty[t] ? StreamEvent::Empty()
                               : StreamEvent::Element(ids[slot++]));
      }
      break;
    }
    case GeneratorSpec::Kind::kBursty: {
      // Runs of one repeated element (mean length 8); a quarter of the runs
      // are silent.
      std::geometric_distribution<int64_t> run_length(1.0 / 8.0);
      std::bernoulli_distribution silent(0.25);
      int64_t t = 0;
      while (t < T) {
        const int64_t len = 1 + run_length(rng);
        const bool quiet = silent(rng);
        const uint64_t id = uniform(rng);
        for (int64_t j = 0; j < len && t < T; ++j, ++t) {
          out.push_back(quiet || empty[t] ? StreamEvent::Empty()
                                          : StreamEvent::Element(id));
        }
      }
      break;
    }
    default:
      throw ConfigError("generator kind not valid for element streams");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stream files

namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename Int>
bool ParseInt(std::string_view s, Int& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

StreamConfig ParseHeader(std::string_view line, long line_no) {
  StreamConfig cfg;
  bool have_t = false, have_n = false, have_mode = false;
  line.remove_prefix(1);  // '#'
  while (!line.empty()) {
    line = Trim(line);
    const size_t sp = line.find(' ');
    std::string_view field = line.substr(0, sp);
    line = sp == std::string_view::npos ? std::string_view() : line.substr(sp);
    const size_t eq = field.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("malformed header field '" + std::string(field) + "'",
                       line_no);
    }
    std::string_view key = field.substr(0, eq);
    std::string_view value = field.substr(eq + 1);
    if (key == "T") {
      have_t = ParseInt(value, cfg.T);
    } else if (key == "n") {
      have_n = ParseInt(value, cfg.n);
    } else if (key == "mode") {
      if (value != "elements" && value != "integers") {
        throw ParseError("unknown mode '" + std::string(value) + "'", line_no);
      }
      cfg.mode = ParseMode(value);
      have_mode = true;
    } else {
      throw ParseError("unknown header key '" + std::string(key) + "'",
                       line_no);
    }
  }
  if (!have_t || !have_n || !have_mode || cfg.T < 1 || cfg.n < 1) {
    throw ParseError("header needs valid T, n and mode", line_no);
  }
  return cfg;
}

}  // namespace

StreamFile ReadStream(std::istream& in, std::optional<StreamMode> mode_hint) {
  StreamFile file;
  std::string raw;
  long line_no = 0;
  // Tokens are kept raw until the mode is known.
  std::vector<std::pair<std::string, long>> tokens;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = Trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (file.had_header || !tokens.empty()) {
        throw ParseError("header must be the first line", line_no);
      }
      file.config = ParseHeader(line, line_no);
      file.had_header = true;
      continue;
    }
    tokens.emplace_back(std::string(line), line_no);
  }
  if (in.bad()) throw IoError("read failure");

  StreamMode mode = StreamMode::kElements;
  if (file.had_header) {
    mode = file.config.mode;
    if (mode_hint && *mode_hint != mode) {
      throw ConfigError("stream header mode '" + std::string(ModeName(mode)) +
                        "' disagrees with the requested mode '" +
                        std::string(ModeName(*mode_hint)) + "'");
    }
  } else if (mode_hint) {
    mode = *mode_hint;
  }

  file.events.reserve(tokens.size());
  uint64_t max_id = 0;
  for (const auto& [token, no] : tokens) {
    if (token == "_") {
      if (mode == StreamMode::kIntegers) {
        throw ParseError("empty symbol in an integer stream", no);
      }
      file.events.push_back(StreamEvent::Empty());
      continue;
    }
    if (mode == StreamMode::kElements) {
      uint64_t id = 0;
      if (token.front() == '-' || !ParseInt(std::string_view(token), id)) {
        throw ParseError("malformed element token '" + token + "'", no);
      }
      max_id = std::max(max_id, id);
      file.events.push_back(StreamEvent::Element(id));
    } else {
      int64_t v = 0;
      if (!ParseInt(std::string_view(token), v)) {
        throw ParseError("malformed integer token '" + token + "'", no);
      }
      file.events.push_back(StreamEvent::Integer(v));
    }
  }

  if (file.had_header) {
    if (static_cast<int64_t>(file.events.size()) > file.config.T) {
      throw ParseError("stream longer than header T=" +
                       std::to_string(file.config.T));
    }
    if (mode == StreamMode::kElements && !file.events.empty() &&
        max_id >= file.config.n) {
      throw ParseError("element id " + std::to_string(max_id) +
                       " outside header universe n=" +
                       std::to_string(file.config.n));
    }
  } else {
    file.config.mode = mode;
    file.config.T = std::max<int64_t>(1, file.events.size());
    file.config.n = mode == StreamMode::kElements ? max_id + 1 : 1;
  }
  return file;
}

StreamFile ReadStreamFile(const std::string& path,
                          std::optional<StreamMode> mode_hint) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stream file '" + path + "'");
  try {
    return ReadStream(in, mode_hint);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

void WriteStream(std::ostream& out, StreamView stream,
                 const StreamConfig& config) {
  out << "#T=" << config.T << " n=" << config.n
      << " mode=" << ModeName(config.mode) << '\n';
  for (const StreamEvent& e : stream) {
    switch (e.kind()) {
      case StreamEvent::Kind::kEmpty:
        out << "_\n";
        break;
      case StreamEvent::Kind::kElement:
        out << e.element() << '\n';
        break;
      case StreamEvent::Kind::kInteger:
        out << e.integer() << '\n';
        break;
    }
  }
}

void WriteStreamFile(const std::string& path, StreamView stream,
                     const StreamConfig& config) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  WriteStream(out, stream, config);
  out.flush();
  if (!out) throw IoError("write failure on '" + path + "'");
}

}  // namespace dpstream
