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

// Plumbing shared by the command line tool, the experiment runner and the
// tests: mechanism runners that turn (options, stream) into CSV tables,
// sensitivity checks, and the experiment grid runner.

#ifndef DPSTREAM_TOOLS_HARNESS_H_
#define DPSTREAM_TOOLS_HARNESS_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dpstream/estimator.h"
#include "dpstream/sensitivity.h"
#include "dpstream/stream.h"
#include "dpstream/summing.h"

namespace dpstream::harness {

// Shortest round-trip decimal form; identical across runs and platforms.
std::string FormatNumber(double value);
std::string FormatNumber(int64_t value);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void Write(std::ostream& out) const;
  std::string ToString() const;
};

// Every knob any mechanism reads. Unused fields are ignored.
struct RunOptions {
  double epsilon = 1.0;
  double eta = 0.1;
  double xi = 0.05;
  double p = 2.0;
  int64_t k = 4;
  int64_t window = 64;
  int64_t T = 0;  // 0: take from the stream
  uint64_t n = 0;
  uint64_t seed = 1;
  bool noise_off = false;
  SummingBackend variant = SummingBackend::kTree;
  std::string stat = "sum";  // sliding windows
  int beta_c = 3;
  double tau_exponent = 3.0;
  int64_t max_copies = 0;
  uint64_t max_buckets = 0;
  int64_t max_heavy_k = 1000;
  // Rows are emitted at t = report_every, 2 report_every, ..., and at the
  // final timestamp.
  int64_t report_every = 1;
  // Refuse runs whose estimated work (instance-steps) exceeds this.
  double max_work = 4e9;
  // Refuse runs that may hold more than this many live CountSketch objects.
  double max_state = 2e6;

  DeskCaps caps() const { return {max_copies, max_buckets}; }
};

// Timestamps at which rows are reported for a stream of `length` events.
bool IsReported(int64_t t, int64_t length, int64_t every);

// One released value and its exact counterpart.
struct SeriesPoint {
  int64_t t = 0;
  double estimate = 0;
  double exact = 0;
};

// Scalar mechanisms: "sum", "distinct", "f2", "moment", "sliding".
bool IsScalarMechanism(std::string_view mechanism);
std::vector<SeriesPoint> RunScalar(std::string_view mechanism,
                                   const RunOptions& options,
                                   StreamView stream);
// Upper bounds used by the resource guard.
struct Footprint {
  double work_per_event = 1.0;  // estimator instance-steps per event
  double sketches = 0.0;        // live CountSketch objects
};
Footprint EstimateFootprint(std::string_view mechanism,
                            const RunOptions& options);
double EstimateWork(std::string_view mechanism, const RunOptions& options,
                    int64_t length);

// CSV tables in each subcommand's schema.
CsvTable SumTable(const std::vector<SeriesPoint>& series);
CsvTable MomentTable(const std::vector<SeriesPoint>& series);
CsvTable SlidingTable(const std::vector<SeriesPoint>& series);
CsvTable RunHeavyHitters(const RunOptions& options, StreamView stream);
CsvTable RunLowFreq(const RunOptions& options, StreamView stream);
// Runs the boosted F2 estimator; optionally writes the final snapshot.
CsvTable RunF2(const RunOptions& options, StreamView stream,
               const std::optional<std::string>& snapshot_path);
CsvTable PointQueryTable(const std::string& snapshot_path, uint64_t element);

// Fills T and n from the stream when unset and checks the stream fits.
RunOptions ResolveShape(RunOptions options, StreamView stream,
                        const StreamConfig& file_config, bool had_header);

// Mappings with a claimed sensitivity bound.
struct SensitivityCheckSpec {
  std::string mapping;  // see SensitivityMappings()
  uint64_t n = 2;
  int64_t T = 4;
  int64_t k = 2;
  uint64_t seed = 1;
  NeighborRelation relation = NeighborRelation::kSubstitution;
  int64_t budget = kDefaultEnumerationBudget;
};

struct SensitivityCheckResult {
  SensitivityCheckSpec spec;
  SensitivityReport report;
  int64_t bound = 0;
  bool pass() const { return report.max_distance <= bound; }
};

std::vector<std::string> SensitivityMappings();
int64_t ClaimedBound(const std::string& mapping, int64_t k);
SensitivityCheckResult RunSensitivityCheck(const SensitivityCheckSpec& spec);
CsvTable SensitivityTable(const std::vector<SensitivityCheckResult>& results);

struct ExperimentSpec {
  std::string mechanism = "sum";
  // Parameter name -> values; names: epsilon, eta, xi, p, k, W.
  std::map<std::string, std::vector<double>> grid;
  std::string generator = "uniform";
  int64_t T = 1024;
  uint64_t n = 64;
  int64_t trials = 1;
  uint64_t seed = 1;
  std::string output = ".";
  RunOptions base;  // noise, variant, stat, caps and other fixed knobs
  int threads = 0;  // 0: hardware concurrency

  void Validate() const;
  static ExperimentSpec FromJson(std::string_view text);
  static ExperimentSpec FromFile(const std::string& path);
};

struct RunSummary {
  double max_error = 0;
  double q50 = 0;
  double q90 = 0;
  double q99 = 0;
  double wall_seconds = 0;  // not written to CSV (non-deterministic)
};

struct RunRecord {
  std::map<std::string, double> point;  // grid coordinates
  int64_t trial = 0;
  std::vector<SeriesPoint> rows;
  RunSummary summary;
};

// Nearest-rank quantile of |estimate - exact| over the rows.
RunSummary Summarize(const std::vector<SeriesPoint>& rows);

struct ExperimentResult {
  std::vector<RunRecord> records;  // grid-major, then trial
  std::vector<std::string> files;  // CSV files written
};

// Deterministic for a fixed spec; trials run on a worker pool and are
// merged by index. Writes "<output>/<mechanism>_<point>.csv" (rows) and
// "<output>/<mechanism>_<point>_summary.csv" per grid point.
ExperimentResult RunExperiment(const ExperimentSpec& spec);

// Seeds of trial i: one for the stream, one for the mechanism.
uint64_t TrialStreamSeed(uint64_t base, int64_t trial);
uint64_t TrialMechanismSeed(uint64_t base, int64_t trial);

}  // namespace dpstream::harness

#endif  // DPSTREAM_TOOLS_HARNESS_H_
