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

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dpstream/errors.h"
#include "dpstream/stream.h"
#include "harness.h"

namespace dpstream {
namespace {

struct GlobalFlags {
  std::optional<uint64_t> seed;
  std::string noise = "on";
  std::string output;
  std::string format = "csv";
  std::string input;
  std::string generate;
  std::string mode;
  int64_t T = 0;
  uint64_t n = 0;
  double epsilon = 1.0;
  double eta = 0.1;
  double xi = 0.05;
  int64_t max_copies = 0;
  uint64_t max_buckets = 0;
  int64_t max_heavy_k = 1000;
  int64_t report_every = 1;
  double max_work = 4e9;
  double max_state = 2e6;
};

uint64_t ResolveSeed(const std::optional<uint64_t>& flag) {
  if (flag) return *flag;
  const char* env = std::getenv("DPSKETCH_SEED");
  if (env == nullptr || *env == '\0') return 1;
  const std::string text(env);
  uint64_t value = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ConfigError("DPSKETCH_SEED must be an unsigned integer, got '" +
                      text + "'");
  }
  return value;
}

harness::RunOptions BaseOptions(const GlobalFlags& g) {
  if (g.noise != "on" && g.noise != "off") {
    throw ConfigError("--noise must be 'on' or 'off'");
  }
  if (g.format != "csv") throw ConfigError("only --format csv is supported");
  harness::RunOptions o;
  o.epsilon = g.epsilon;
  o.eta = g.eta;
  o.xi = g.xi;
  o.T = g.T;
  o.n = g.n;
  o.seed = ResolveSeed(g.seed);
  o.noise_off = g.noise == "off";
  o.max_copies = g.max_copies;
  o.max_buckets = g.max_buckets;
  o.max_heavy_k = g.max_heavy_k;
  o.report_every = g.report_every;
  o.max_work = g.max_work;
  o.max_state = g.max_state;
  if (o.report_every < 1) throw ConfigError("--report-every must be >= 1");
  return o;
}

struct LoadedStream {
  Stream events;
  harness::RunOptions options;
};

LoadedStream LoadStream(const GlobalFlags& g, harness::RunOptions o,
                        std::optional<StreamMode> mode_hint) {
  if (!g.mode.empty()) mode_hint = ParseMode(g.mode);
  if (!g.input.empty() && !g.generate.empty()) {
    throw ConfigError("--input and --generate are mutually exclusive");
  }
  if (!g.input.empty()) {
    StreamFile file = ReadStreamFile(g.input, mode_hint);
    o = harness::ResolveShape(o, file.events, file.config, file.had_header);
    return {std::move(file.events), o};
  }
  if (g.generate.empty()) {
    throw ConfigError("a stream is required: pass --input FILE or "
                      "--generate SPEC");
  }
  const GeneratorSpec spec = GeneratorSpec::Parse(g.generate);
  // Integer streams have no universe.
  if (spec.integer_kind() && o.n == 0) o.n = 1;
  if (o.T < 1 || o.n < 1) {
    throw ConfigError("--generate needs --T and --n");
  }
  const StreamConfig cfg{
      o.T, o.n,
      spec.integer_kind() ? StreamMode::kIntegers : StreamMode::kElements};
  cfg.Validate();
  // The stream seed is decoupled from the mechanism seed.
  Stream events = GenerateStream(spec, cfg, HashCombine(o.seed, 0x67656eULL));
  return {std::move(events), o};
}

void Emit(const GlobalFlags& g, const harness::CsvTable& table) {
  if (g.output.empty()) {
    table.Write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(g.output, std::ios::binary);
  if (!out) throw IoError("cannot write '" + g.output + "'");
  table.Write(out);
  if (!out) throw IoError("write failed for '" + g.output + "'");
}

int Run(int argc, char** argv) {
  CLI::App app{"Differentially private continual-release stream statistics",
               "dpstream"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags g;
  app.add_option("--seed", g.seed,
                 "Master seed (default: $DPSKETCH_SEED, then 1)");
  app.add_option("--noise", g.noise, "on | off")
      ->check(CLI::IsMember({"on", "off"}));
  app.add_option("--output", g.output, "Output file (default: stdout)");
  app.add_option("--format", g.format, "Output format")
      ->check(CLI::IsMember({"csv"}));
  app.add_option("--input", g.input, "Stream file");
  app.add_option("--generate", g.generate,
                 "Synthetic stream, e.g. zipf:1.2 or poisson:5,empty=0.1");
  app.add_option("--mode", g.mode, "elements | integers (headerless files)")
      ->check(CLI::IsMember({"elements", "integers"}));
  app.add_option("--T", g.T, "Stream length");
  app.add_option("--n", g.n, "Universe size");
  app.add_option("--epsilon", g.epsilon, "Privacy parameter");
  app.add_option("--eta", g.eta, "Relative accuracy parameter");
  app.add_option("--xi", g.xi, "Failure probability");
  app.add_option("--max-copies", g.max_copies,
                 "Cap on boosted copies (0: no cap)");
  app.add_option("--max-buckets", g.max_buckets,
                 "Cap on hash ranges (0: no cap)");
  app.add_option("--max-heavy-k", g.max_heavy_k,
                 "Cap on the heavy-hitter k used by moment estimation");
  app.add_option("--report-every", g.report_every,
                 "Emit a row every this many timestamps (and at the end)");
  app.add_option("--max-work", g.max_work,
                 "Refuse runs above this many estimator instance-steps");
  app.add_option("--max-state", g.max_state,
                 "Refuse runs that may hold more live sketches than this");

  auto* sum = app.add_subcommand("sum", "Private prefix sums");
  std::string sum_mechanism = "tree";
  sum->add_option("--mechanism", sum_mechanism, "tree | group")
      ->check(CLI::IsMember({"tree", "group"}));

  auto* distinct = app.add_subcommand("distinct", "Distinct elements");
  std::string variant = "tree";
  distinct->add_option("--variant", variant, "tree | group")
      ->check(CLI::IsMember({"tree", "group"}));

  auto* f2 = app.add_subcommand("f2", "Second frequency moment");
  std::string snapshot_out;
  f2->add_option("--snapshot", snapshot_out,
                 "Write the final sketch snapshot to this file");

  auto* point = app.add_subcommand("point-query",
                                   "Frequency of one element from a snapshot");
  std::string snapshot_in;
  uint64_t element = 0;
  point->add_option("--snapshot", snapshot_in, "Snapshot file")->required();
  point->add_option("--element", element, "Element id")->required();

  auto* hh = app.add_subcommand("heavy-hitters", "l_p heavy hitters");
  double hh_p = 2.0;
  int64_t hh_k = 4;
  double tau_exponent = 3.0;
  hh->add_option("--p", hh_p, "Moment order");
  hh->add_option("--k", hh_k, "Heaviness 1/k");
  hh->add_option("--tau-exponent", tau_exponent,
                 "Exponent of the log factor in the frequency threshold");

  auto* lf = app.add_subcommand("low-freq", "Counts of elements per frequency");
  int64_t lf_k = 4;
  lf->add_option("--k", lf_k, "Largest frequency reported");

  auto* moment = app.add_subcommand("moment", "l_p frequency moment");
  double moment_p = 2.0;
  int beta_c = 3;
  moment->add_option("--p", moment_p, "Moment order");
  moment->add_option("--beta-c", beta_c, "Grid exponent of the interval base");

  auto* sliding = app.add_subcommand("sliding", "Sliding-window statistics");
  std::string stat = "sum";
  int64_t window = 64;
  double sliding_p = 2.0;
  sliding->add_option("--stat", stat, "sum | distinct | f2 | moment")
      ->check(CLI::IsMember({"sum", "distinct", "f2", "moment"}));
  sliding->add_option("--W", window, "Window length");
  sliding->add_option("--p", sliding_p, "Moment order for --stat moment");

  auto* sens = app.add_subcommand("sensitivity-check",
                                  "Exhaustive sensitivity of a stream mapping");
  std::vector<std::string> mappings;
  std::string relation = "substitution";
  int64_t sens_k = 2;
  int64_t seeds = 1;
  int64_t budget = kDefaultEnumerationBudget;
  sens->add_option("--mapping", mappings,
                   "Mapping ids (default: all)")
      ->check(CLI::IsMember(harness::SensitivityMappings()));
  sens->add_option("--relation", relation, "substitution | empty")
      ->check(CLI::IsMember({"substitution", "empty"}));
  sens->add_option("--k", sens_k, "k for the frequency-counter mapping");
  sens->add_option("--seeds", seeds, "Number of hash seeds (seed, seed+1, ...)");
  sens->add_option("--budget", budget, "Limit on neighbouring pairs");

  auto* experiment = app.add_subcommand("experiment",
                                        "Run a JSON experiment grid");
  std::string spec_path;
  int threads = -1;
  experiment->add_option("--spec", spec_path, "Experiment JSON")->required();
  experiment->add_option("--threads", threads, "Worker threads (0: all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    app.exit(e);
    return kExitConfig;
  }

  harness::RunOptions o = BaseOptions(g);

  if (*sum) {
    o.variant = ParseBackend(sum_mechanism == "group" ? "group" : "tree");
    LoadedStream s = LoadStream(g, o, StreamMode::kIntegers);
    Emit(g, harness::SumTable(harness::RunScalar("sum", s.options, s.events)));
  } else if (*distinct) {
    o.variant = ParseBackend(variant);
    LoadedStream s = LoadStream(g, o, StreamMode::kElements);
    Emit(g, harness::SumTable(
                harness::RunScalar("distinct", s.options, s.events)));
  } else if (*f2) {
    LoadedStream s = LoadStream(g, o, StreamMode::kElements);
    std::optional<std::string> path;
    if (!snapshot_out.empty()) path = snapshot_out;
    Emit(g, harness::RunF2(s.options, s.events, path));
  } else if (*point) {
    Emit(g, harness::PointQueryTable(snapshot_in, element));
  } else if (*hh) {
    o.p = hh_p;
    o.k = hh_k;
    o.tau_exponent = tau_exponent;
    LoadedStream s = LoadStream(g, o, StreamMode::kElements);
    Emit(g, harness::RunHeavyHitters(s.options, s.events));
  } else if (*lf) {
    o.k = lf_k;
    LoadedStream s = LoadStream(g, o, StreamMode::kElements);
    Emit(g, harness::RunLowFreq(s.options, s.events));
  } else if (*moment) {
    o.p = moment_p;
    o.beta_c = beta_c;
    LoadedStream s = LoadStream(g, o, StreamMode::kElements);
    Emit(g, harness::MomentTable(
                harness::RunScalar("moment", s.options, s.events)));
  } else if (*sliding) {
    o.stat = stat;
    o.window = window;
    o.p = sliding_p;
    LoadedStream s = LoadStream(
        g, o, stat == "sum" ? StreamMode::kIntegers : StreamMode::kElements);
    Emit(g, harness::SlidingTable(
                harness::RunScalar("sliding", s.options, s.events)));
  } else if (*sens) {
    if (mappings.empty()) mappings = harness::SensitivityMappings();
    if (seeds < 1) throw ConfigError("--seeds must be >= 1");
    std::vector<harness::SensitivityCheckResult> results;
    bool all_pass = true;
    for (const std::string& m : mappings) {
      for (int64_t i = 0; i < seeds; ++i) {
        harness::SensitivityCheckSpec spec;
        spec.mapping = m;
        spec.n = g.n > 0 ? g.n : 2;
        spec.T = g.T > 0 ? g.T : 5;
        spec.k = sens_k;
        spec.seed = o.seed + static_cast<uint64_t>(i);
        spec.relation = relation == "empty"
                            ? NeighborRelation::kEmptyReplacement
                            : NeighborRelation::kSubstitution;
        spec.budget = budget;
        results.push_back(harness::RunSensitivityCheck(spec));
        all_pass = all_pass && results.back().pass();
      }
    }
    Emit(g, harness::SensitivityTable(results));
    return all_pass ? 0 : 1;
  } else if (*experiment) {
    harness::ExperimentSpec spec = harness::ExperimentSpec::FromFile(spec_path);
    if (!g.output.empty()) spec.output = g.output;
    if (threads >= 0) spec.threads = threads;
    const harness::ExperimentResult result = harness::RunExperiment(spec);
    for (const std::string& f : result.files) std::cout << f << '\n';
  }
  return 0;
}

}  // namespace
}  // namespace dpstream

int main(int argc, char** argv) {
  try {
    return dpstream::Run(argc, argv);
  } catch (const dpstream::Error& e) {
    std::cerr << "dpstream: " << e.what() << '\n';
    return dpstream::ExitCodeFor(e);
  } catch (const std::bad_alloc&) {
    std::cerr << "dpstream: out of memory\n";
    return dpstream::kExitResource;
  } catch (const std::exception& e) {
    std::cerr << "dpstream: " << e.what() << '\n';
    return 1;
  }
}
