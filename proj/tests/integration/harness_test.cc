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

#include "harness.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "dpstream/errors.h"
#include "dpstream/stream.h"

namespace dpstream::harness {
namespace {

std::string ReadAll(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::filesystem::path TempDir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("dpstream_harness_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

TEST(FormatNumberTest, ShortestRoundTrip) {
  EXPECT_EQ(FormatNumber(0.0), "0");
  EXPECT_EQ(FormatNumber(-0.0), "0");
  EXPECT_EQ(FormatNumber(1.5), "1.5");
  EXPECT_EQ(FormatNumber(0.1), "0.1");
  EXPECT_EQ(FormatNumber(int64_t{-42}), "-42");
  EXPECT_EQ(std::stod(FormatNumber(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(CsvTableTest, HeaderAndRows) {
  const CsvTable t{{"a", "b"}, {{"1", "2"}, {"3", "4"}}};
  EXPECT_EQ(t.ToString(), "a,b\n1,2\n3,4\n");
}

TEST(ReportingTest, EveryAndFinal) {
  EXPECT_TRUE(IsReported(4, 10, 4));
  EXPECT_FALSE(IsReported(5, 10, 4));
  EXPECT_TRUE(IsReported(10, 10, 4));
  EXPECT_TRUE(IsReported(3, 10, 1));
}

TEST(RunScalarTest, NoiseOffSumAndDistinctAreExact) {
  const Stream ints = GenerateStream(GeneratorSpec::Parse("poisson:3"),
                                     {500, 1, StreamMode::kIntegers}, 2);
  RunOptions o;
  o.noise_off = true;
  o.T = 500;
  o.n = 1;
  for (const SeriesPoint& p : RunScalar("sum", o, ints)) {
    ASSERT_EQ(p.estimate, p.exact) << p.t;
  }
  const Stream elems = GenerateStream(GeneratorSpec::Parse("zipf:1.1"),
                                      {500, 100, StreamMode::kElements}, 2);
  o.n = 100;
  const auto rows = RunScalar("distinct", o, elems);
  ASSERT_EQ(rows.size(), 500u);
  for (const SeriesPoint& p : rows) ASSERT_EQ(p.estimate, p.exact) << p.t;
}

TEST(RunScalarTest, SlidingWindowExactColumn) {
  const Stream s = GenerateStream(GeneratorSpec::Parse("bernoulli:0.5"),
                                  {300, 1, StreamMode::kIntegers}, 4);
  RunOptions o;
  o.noise_off = true;
  o.T = 300;
  o.n = 1;
  o.window = 20;
  o.stat = "sum";
  for (const SeriesPoint& p : RunScalar("sliding", o, s)) {
    int64_t exact = 0;
    for (const StreamEvent& e : WindowView(s, p.t, {20})) exact += e.SumValue();
    ASSERT_EQ(p.exact, double(exact)) << p.t;
  }
}

TEST(RunScalarTest, ResourceGuard) {
  const Stream s = GenerateStream(GeneratorSpec::Parse("uniform"),
                                  {4096, 1 << 20, StreamMode::kElements}, 1);
  RunOptions o;
  o.T = 4096;
  o.n = 1 << 20;
  o.p = 2.0;
  o.max_work = 1e6;
  EXPECT_THROW(RunScalar("moment", o, s), ResourceError);
  EXPECT_GT(EstimateWork("moment", o, 4096), 1e6);
}

TEST(ResolveShapeTest, FillsAndChecks) {
  const Stream s = {StreamEvent::Element(5), StreamEvent::Empty()};
  RunOptions o;
  const RunOptions r = ResolveShape(o, s, {}, false);
  EXPECT_EQ(r.T, 2);
  EXPECT_GE(r.n, 6u);
  RunOptions bad;
  bad.T = 5;
  EXPECT_THROW(ResolveShape(bad, s, {2, 6, StreamMode::kElements}, true),
               ConfigError);
}

TEST(SensitivityCheckTest, EveryMappingWithinBoundUnderEmptyReplacement) {
  for (const std::string& m : SensitivityMappings()) {
    SensitivityCheckSpec spec;
    spec.mapping = m;
    spec.n = 2;
    spec.T = 4;
    spec.relation = NeighborRelation::kEmptyReplacement;
    const SensitivityCheckResult r = RunSensitivityCheck(spec);
    EXPECT_TRUE(r.pass()) << m << " " << r.report.max_distance << " > "
                          << r.bound;
    EXPECT_EQ(r.bound, ClaimedBound(m, spec.k));
  }
  EXPECT_THROW(ClaimedBound("nope", 1), ConfigError);
}

TEST(SensitivityCheckTest, TableSchema) {
  SensitivityCheckSpec spec;
  spec.mapping = "identity";
  const CsvTable t = SensitivityTable({RunSensitivityCheck(spec)});
  EXPECT_EQ(t.ToString().substr(0, t.ToString().find('\n')),
            "mapping,relation,n,T,k,seed,max_distance,bound,pairs,status");
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0].back(), "PASS");
}

TEST(SummarizeTest, NearestRank) {
  std::vector<SeriesPoint> rows;
  for (int i = 1; i <= 10; ++i) rows.push_back({i, double(i), 0.0});
  const RunSummary s = Summarize(rows);
  EXPECT_EQ(s.max_error, 10.0);
  EXPECT_EQ(s.q50, 5.0);
  EXPECT_EQ(s.q90, 9.0);
  EXPECT_EQ(s.q99, 10.0);
}

TEST(ExperimentSpecTest, JsonErrors) {
  EXPECT_THROW(ExperimentSpec::FromJson("{"), ParseError);
  EXPECT_THROW(ExperimentSpec::FromJson("[1]"), ConfigError);
  EXPECT_THROW(ExperimentSpec::FromJson(R"({"T": "x"})"), ConfigError);
  EXPECT_THROW(ExperimentSpec::FromJson(R"({"grid": {"bogus": [1]}})"),
               ConfigError);
  EXPECT_THROW(ExperimentSpec::FromJson(R"({"mechanism": "nope"})"),
               ConfigError);
  EXPECT_THROW(ExperimentSpec::FromFile("/nonexistent/spec.json"), IoError);
}

TEST(ExperimentTest, DeterministicAcrossThreadCounts) {
  const std::string json = R"({
    "mechanism": "sum", "generator": "poisson:2", "T": 256, "n": 1,
    "trials": 4, "seed": 11, "grid": {"epsilon": [0.5, 2]},
    "report_every": 16})";
  ExperimentSpec a = ExperimentSpec::FromJson(json);
  a.output = TempDir("a").string();
  a.threads = 1;
  ExperimentSpec b = a;
  b.output = TempDir("b").string();
  b.threads = 4;
  const ExperimentResult ra = RunExperiment(a);
  const ExperimentResult rb = RunExperiment(b);
  ASSERT_EQ(ra.files.size(), 4u);
  ASSERT_EQ(rb.files.size(), 4u);
  for (size_t i = 0; i < ra.files.size(); ++i) {
    EXPECT_EQ(std::filesystem::path(ra.files[i]).filename(),
              std::filesystem::path(rb.files[i]).filename());
    EXPECT_EQ(ReadAll(ra.files[i]), ReadAll(rb.files[i])) << ra.files[i];
  }
  EXPECT_EQ(std::filesystem::path(ra.files[0]).filename().string(),
            "sum_epsilon=0.5.csv");
}

TEST(ExperimentTest, SummaryMatchesRows) {
  ExperimentSpec spec = ExperimentSpec::FromJson(R"({
    "mechanism": "distinct", "generator": "uniform", "T": 200, "n": 50,
    "trials": 3, "seed": 5, "grid": {"epsilon": 1}})");
  spec.output = TempDir("summary").string();
  const ExperimentResult r = RunExperiment(spec);
  ASSERT_EQ(r.records.size(), 3u);
  for (const RunRecord& rec : r.records) {
    const RunSummary s = Summarize(rec.rows);
    EXPECT_EQ(s.max_error, rec.summary.max_error);
    EXPECT_EQ(s.q90, rec.summary.q90);
  }
  // Trials share streams only through the seed schedule.
  EXPECT_NE(TrialStreamSeed(5, 0), TrialStreamSeed(5, 1));
  EXPECT_NE(TrialStreamSeed(5, 0), TrialMechanismSeed(5, 0));
}

}  // namespace
}  // namespace dpstream::harness
