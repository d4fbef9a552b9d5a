//
// Copyright 2026 The apesynth Authors.
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

#include <gtest/gtest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "apesynth/cli.hpp"
#include "json.hpp"
#include "support/cli_fixture.hpp"

namespace apesynth {
namespace {

using testing::run_cli;
using testing::slurp;
using testing::spit;
using testing::ToyWorkspace;

bool exists(const std::string& p) { return std::filesystem::exists(p); }

class Pipeline : public ::testing::Test {
 protected:
  void SetUp() override {
    ASSERT_EQ(run_cli({"stats", "--gold", ws.gold, "--out", stats}).code, 0);
  }
  ToyWorkspace ws;
  std::string stats = ws.file("stats.json");
};

TEST_F(Pipeline, StatsWritesFileAndProvenance) {
  EXPECT_TRUE(exists(stats));
  const auto prov = nlohmann::json::parse(slurp(stats + ".prov.json"));
  EXPECT_EQ(prov["tool"], "apesynth");
  EXPECT_EQ(prov["command"], "stats");
  EXPECT_EQ(prov["inputs"][0]["path"], ws.gold);
  EXPECT_EQ(prov["inputs"][0]["sha256"], sha256_file(ws.gold));
  EXPECT_EQ(prov["output"]["sha256"], sha256_file(stats));
  EXPECT_EQ(prov["seed"], nullptr);
}

TEST_F(Pipeline, FullNativeRun) {
  const auto mlm = ws.file("mlm.jsonl"), model = ws.file("model.json");
  const auto masked = ws.file("masked.jsonl"), noised = ws.file("noised.tsv");
  const auto merged = ws.file("merged.tsv");
  ASSERT_EQ(run_cli({"mlm-data", "--trans", ws.gold, "--stats", stats, "--seed", "3", "--out", mlm}).code, 0);
  ASSERT_EQ(run_cli({"train-filler", "--mlm", mlm, "--out", model}).code, 0);
  ASSERT_EQ(run_cli({"mask", "--bitext", ws.bitext, "--stats", stats, "--seed", "4", "--out", masked}).code, 0);
  auto r = run_cli({"fill", "--masked", masked, "--model", model, "--seed", "5", "--out", noised, "--drop-empty"});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run_cli({"interleave", "--trans", ws.trans, "--noise", noised, "--stats", stats, "--lambda", "2", "--out", merged});
  // Dropped records leave the corpora unaligned, so only run when none were.
  const auto n_noised = read_corpus<Triplet>(noised, Format::kTsv).size();
  if (n_noised == 100) {
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rep = nlohmann::json::parse(slurp(merged + ".report.json"));
    EXPECT_EQ(rep["total"], 100);
    EXPECT_TRUE(exists(merged + ".prov.json"));
  }
  r = run_cli({"score", "--triplets", noised, "--metric", "all"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("TER"), std::string::npos);
  EXPECT_NE(r.out.find("BLEU"), std::string::npos);
  for (const auto& f : {mlm, model, masked, noised}) EXPECT_TRUE(exists(f + ".prov.json")) << f;
  const auto prov = nlohmann::json::parse(slurp(masked + ".prov.json"));
  EXPECT_EQ(prov["seed"], 4);
  EXPECT_EQ(prov["command_line"].get<std::string>().find("--threads"), std::string::npos);
}

TEST_F(Pipeline, ExternalFiller) {
  const auto masked = ws.file("masked.jsonl"), out = ws.file("out.jsonl");
  ASSERT_EQ(run_cli({"mask", "--bitext", ws.bitext, "--stats", stats, "--seed", "4", "--out", masked}).code, 0);
  auto r = run_cli({"fill", "--masked", masked, "--filler-cmd", std::string(APESYNTH_FAKE_FILLER) + " unk",
                    "--out", out, "--drop-empty", "--batch-size", "8"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& t : read_corpus<Triplet>(out, Format::kJsonl)) EXPECT_FALSE(t.mt.contains_mask());
  r = run_cli({"fill", "--masked", masked, "--filler-cmd", std::string(APESYNTH_FAKE_FILLER) + " unchanged",
               "--out", out, "--drop-empty"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("surviving <MASK>"), std::string::npos) << r.err;
}

TEST_F(Pipeline, RandBaseline) {
  const auto out = ws.file("rand.tsv");
  ASSERT_EQ(run_cli({"rand", "--bitext", ws.bitext, "--stats", stats, "--seed", "9", "--out", out, "--drop-empty"}).code, 0);
  EXPECT_FALSE(read_corpus<Triplet>(out, Format::kTsv).empty());
}

TEST_F(Pipeline, AlignAndReport) {
  const auto al = ws.file("align.jsonl"), csv = ws.file("dist.csv");
  ASSERT_EQ(run_cli({"align", "--triplets", ws.gold, "--out", al}).code, 0);
  const std::string first = slurp(al).substr(0, slurp(al).find('\n'));
  const auto j = nlohmann::json::parse(first);
  EXPECT_EQ(j["id"], 0);
  EXPECT_TRUE(j["ops"].is_array());
  auto r = run_cli({"report-dist", "--a", ws.gold, "--b", ws.trans, "--label-a", "gold", "--label-b", "trans", "--csv", csv});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto text = slurp(csv);
  EXPECT_NE(text.find("\ngold,"), std::string::npos);
  EXPECT_NE(text.find("\ntrans,"), std::string::npos);
}

TEST_F(Pipeline, LambdaOutsideDomainIsUsageError) {
  for (const char* l : {"0.5", "4", "abc"}) {
    const auto r = run_cli({"interleave", "--trans", ws.trans, "--noise", ws.trans, "--stats", stats,
                            "--lambda", l, "--out", ws.file("x.tsv")});
    EXPECT_EQ(r.code, 1) << l;
    EXPECT_NE(r.err.find("lambda"), std::string::npos);
  }
}

TEST_F(Pipeline, ShiftSettingMustMatchStats) {
  const auto r = run_cli({"mlm-data", "--trans", ws.gold, "--stats", stats, "--allow-shifts", "--out", ws.file("m.jsonl")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--allow-shifts"), std::string::npos);
}

TEST_F(Pipeline, LambdaExtremesThroughCli) {
  const auto out = ws.file("m.tsv");
  auto r = run_cli({"interleave", "--trans", ws.trans, "--noise", ws.gold, "--stats", stats, "--lambda", "0", "--out", out});
  // gold and trans do not share references, so pairing must fail.
  EXPECT_EQ(r.code, 2);
  r = run_cli({"interleave", "--trans", ws.trans, "--noise", ws.trans, "--stats", stats, "--lambda", "inf", "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("noise 0.00%  trans 100.00%"), std::string::npos) << r.out;
}

TEST(Cli, MissingStatsNamesArtifact) {
  ToyWorkspace ws(10);
  const auto r = run_cli({"mask", "--bitext", ws.bitext, "--stats", ws.file("nope.json"), "--out", ws.file("m.jsonl")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("nope.json"), std::string::npos);
  EXPECT_NE(r.err.find("apesynth stats"), std::string::npos);
}

TEST(Cli, MissingInputIsUsageError) {
  ToyWorkspace ws(10);
  const auto r = run_cli({"stats", "--gold", ws.file("absent.tsv"), "--out", ws.file("s.json")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("absent.tsv"), std::string::npos);
}

TEST(Cli, MalformedCorpusIsDataError) {
  ToyWorkspace ws(10);
  spit(ws.file("bad.tsv"), "a\tb\tc\nonly two\tfields\n");
  const auto r = run_cli({"stats", "--gold", ws.file("bad.tsv"), "--out", ws.file("s.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST(Cli, UnknownFlagAndMissingSubcommand) {
  EXPECT_EQ(run_cli({"stats", "--bogus"}).code, 1);
  EXPECT_EQ(run_cli({}).code, 1);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
  const auto v = run_cli({"--version"});
  EXPECT_EQ(v.code, 0);
  EXPECT_NE(v.out.find("0.1.0"), std::string::npos);
}

TEST(Cli, FillNeedsExactlyOneFiller) {
  ToyWorkspace ws(10);
  spit(ws.file("m.jsonl"), "");
  EXPECT_EQ(run_cli({"fill", "--masked", ws.file("m.jsonl"), "--out", ws.file("o.tsv")}).code, 1);
}

TEST(Cli, ConfigFileSuppliesOptions) {
  ToyWorkspace ws(30);
  spit(ws.file("cfg.toml"), "[stats]\ngold = \"" + ws.gold + "\"\nout = \"" + ws.file("s.json") + "\"\n");
  const auto r = run_cli({"--config", ws.file("cfg.toml"), "stats"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(exists(ws.file("s.json")));
}

TEST(Cli, ScoreSegmentFiles) {
  testing::TempDir dir;
  spit(dir.file("h.txt"), "a b x d\n");
  spit(dir.file("r.txt"), "a b c d\n");
  const auto r = run_cli({"score", "--hyp", dir.file("h.txt"), "--ref", dir.file("r.txt"), "--metric", "ter",
                          "--json", dir.file("s.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("TER  25.00"), std::string::npos) << r.out;
  EXPECT_DOUBLE_EQ(nlohmann::json::parse(slurp(dir.file("s.json")))["ter"]["percent"].get<double>(), 25.0);
  EXPECT_EQ(run_cli({"score", "--hyp", dir.file("h.txt"), "--metric", "ter"}).code, 1);
  EXPECT_EQ(run_cli({"score", "--hyp", dir.file("h.txt"), "--ref", dir.file("r.txt"), "--metric", "x"}).code, 1);
}

}  // namespace
}  // namespace apesynth
