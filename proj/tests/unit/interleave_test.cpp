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

#include <limits>
#include <string>
#include <vector>

#include "apesynth/error.hpp"
#include "apesynth/interleave.hpp"
#include "apesynth/stats.hpp"
#include "support/toy_corpus.hpp"

namespace apesynth {
namespace {

struct Pair {
  std::vector<Triplet> trans, noise;
};

Pair toy_pair(std::size_t n) {
  testing::ToyOptions o;
  o.records = n;
  const auto bitexts = testing::toy_bitexts(o);
  return {testing::toy_translations(bitexts, 1.0, 3), testing::toy_translations(bitexts, 0.3, 4)};
}

TEST(Lambda, ParseDomain) {
  EXPECT_TRUE(Lambda::parse("0").is_zero());
  EXPECT_TRUE(Lambda::parse("inf").is_infinite());
  EXPECT_TRUE(Lambda::parse("infinity").is_infinite());
  EXPECT_DOUBLE_EQ(Lambda::parse("2.5").value(), 2.5);
  EXPECT_DOUBLE_EQ(Lambda::parse("1").value(), 1.0);
  EXPECT_DOUBLE_EQ(Lambda::parse("3").value(), 3.0);
  for (const char* bad : {"0.5", "3.01", "-1", "abc", "2x", "", "nan"}) {
    EXPECT_THROW(Lambda::parse(bad), UsageError) << bad;
  }
  EXPECT_EQ(Lambda::parse("inf").str(), "inf");
  EXPECT_EQ(Lambda::parse("2").str(), "2.0");
}

TEST(KeepTranslation, Rule) {
  InterleaveConfig cfg;
  cfg.mu_gold = 0.3;
  cfg.sigma_gold = 0.1;
  cfg.lambda = Lambda::finite(1.0);
  EXPECT_TRUE(keep_translation(0.3, cfg));
  EXPECT_TRUE(keep_translation(0.35, cfg));
  EXPECT_FALSE(keep_translation(0.45, cfg));
  cfg.lambda = Lambda::finite(2.0);
  EXPECT_TRUE(keep_translation(0.45, cfg));
  cfg.lambda = Lambda::zero();
  EXPECT_FALSE(keep_translation(0.3, cfg));
  cfg.lambda = Lambda::infinite();
  EXPECT_TRUE(keep_translation(100.0, cfg));
}

TEST(KeepTranslation, ExactMeanKeptForEveryFiniteLambda) {
  InterleaveConfig cfg;
  cfg.mu_gold = 0.25;
  cfg.sigma_gold = 0.0;
  for (double l : {1.0, 1.5, 2.0, 3.0}) {
    cfg.lambda = Lambda::finite(l);
    EXPECT_TRUE(keep_translation(0.25, cfg));
  }
}

TEST(Interleave, Extremes) {
  const auto p = toy_pair(200);
  InterleaveConfig cfg;
  cfg.mu_gold = 0.2;
  cfg.sigma_gold = 0.1;
  cfg.lambda = Lambda::zero();
  auto [out0, r0] = interleave(p.trans, p.noise, cfg);
  EXPECT_EQ(r0.kept_noise, 200u);
  EXPECT_EQ(r0.kept_trans, 0u);
  EXPECT_EQ(out0, p.noise);
  cfg.lambda = Lambda::infinite();
  auto [outi, ri] = interleave(p.trans, p.noise, cfg);
  EXPECT_EQ(ri.kept_trans, 200u);
  EXPECT_EQ(outi, p.trans);
}

TEST(Interleave, SelectionMatchesRule) {
  const auto p = toy_pair(300);
  InterleaveConfig cfg;
  cfg.mu_gold = 0.25;
  cfg.sigma_gold = 0.08;
  cfg.lambda = Lambda::finite(1.5);
  auto [out, rep] = interleave(p.trans, p.noise, cfg, 4);
  ASSERT_EQ(out.size(), p.trans.size());
  std::uint64_t kept = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double rate = edit_rate(p.trans[i].mt, p.trans[i].pe, false).rate;
    const bool expect_trans = std::abs(rate - 0.25) <= 1.5 * 0.08;
    EXPECT_EQ(out[i], expect_trans ? p.trans[i] : p.noise[i]);
    kept += expect_trans;
  }
  EXPECT_EQ(rep.kept_trans, kept);
  EXPECT_EQ(rep.kept_trans + rep.kept_noise, rep.total);
}

TEST(Interleave, MismatchedCorporaRejected) {
  auto p = toy_pair(10);
  InterleaveConfig cfg;
  auto short_noise = p.noise;
  short_noise.pop_back();
  EXPECT_THROW(interleave(p.trans, short_noise, cfg), DataError);
  auto bad_id = p.noise;
  bad_id[3].id = 99;
  EXPECT_THROW(interleave(p.trans, bad_id, cfg), DataError);
  auto bad_pe = p.noise;
  bad_pe[3].pe.push_back("extra");
  EXPECT_THROW(interleave(p.trans, bad_pe, cfg), DataError);
}

TEST(InterleaveReport, Json) {
  InterleaveReport r;
  r.total = 4;
  r.kept_trans = 1;
  r.kept_noise = 3;
  InterleaveConfig cfg;
  cfg.lambda = Lambda::infinite();
  const auto j = to_json(r, cfg);
  EXPECT_EQ(j["lambda"], "inf");
  EXPECT_DOUBLE_EQ(j["noise_ratio"].get<double>(), 0.75);
}

}  // namespace
}  // namespace apesynth
