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

#include <string>
#include <vector>

#include "apesynth/mlm_data.hpp"
#include "apesynth/rng.hpp"
#include "support/toy_corpus.hpp"

namespace apesynth {
namespace {

const Triplet kAxc{0, {"s"}, {"A", "X", "C"}, {"A", "B", "C"}};

TEST(MaskBudget, Ceiling) {
  EXPECT_EQ(mask_budget(3, 0.0), 0u);
  EXPECT_EQ(mask_budget(3, 0.1), 1u);
  EXPECT_EQ(mask_budget(10, 0.3), 3u);  // 10 * 0.3 is 3.0000000000000004
  EXPECT_EQ(mask_budget(4, 0.5), 2u);
  EXPECT_EQ(mask_budget(4, 0.51), 3u);
}

TEST(BuildMlmRecord, UncappedMasksEveryErrorPair) {
  Rng rng(1);
  MlmTrace tr;
  const auto r = build_mlm_record_at_rate(kAxc, 1.0, rng, false, &tr);
  EXPECT_EQ(r.y_mask, (TokenSeq{"A", "<MASK>", "C"}));
  EXPECT_EQ(r.y_noise, (TokenSeq{"A", "X", "C"}));
  EXPECT_FALSE(tr.capped);
  EXPECT_EQ(tr.masked_sub, 1u);
}

TEST(BuildMlmRecord, ZeroRateMasksNothing) {
  Rng rng(1);
  MlmTrace tr;
  const auto r = build_mlm_record_at_rate(kAxc, 0.0, rng, false, &tr);
  EXPECT_TRUE(tr.capped);
  EXPECT_EQ(tr.budget, 0u);
  EXPECT_EQ(r.y_mask, (TokenSeq{"A", "B", "C"}));
  EXPECT_EQ(r.y_noise, (TokenSeq{"A", "B", "C"}));
}

TEST(BuildMlmRecord, PerfectTranslationHasNoMasks) {
  const Triplet t{0, {"s"}, {"a", "b", "c"}, {"a", "b", "c"}};
  Rng rng(1);
  const auto r = build_mlm_record_at_rate(t, 0.5, rng, false);
  EXPECT_EQ(r.y_mask, t.pe);
  EXPECT_EQ(r.y_noise, t.pe);
}

TEST(BuildMlmRecord, InsertionBecomesExtraMask) {
  const Triplet t{0, {"s"}, {"a", "x", "b"}, {"a", "b"}};
  Rng rng(1);
  const auto r = build_mlm_record_at_rate(t, 1.0, rng, false);
  EXPECT_EQ(r.y_mask, (TokenSeq{"a", "<MASK>", "b"}));
  EXPECT_EQ(r.y_noise, (TokenSeq{"a", "x", "b"}));
}

TEST(BuildMlmRecord, DeletionIsNeverMasked) {
  const Triplet t{0, {"s"}, {"a", "c"}, {"a", "b", "c"}};
  Rng rng(1);
  const auto r = build_mlm_record_at_rate(t, 1.0, rng, false);
  EXPECT_EQ(r.y_mask, (TokenSeq{"a", "b", "c"}));
  EXPECT_EQ(r.y_noise, (TokenSeq{"a", "b", "c"}));
}

TEST(BuildMlmRecord, CapRespectedOnToyCorpus) {
  testing::ToyOptions o;
  o.records = 2000;
  o.max_error = 1.0;
  const auto corpus = testing::toy_triplets(o);
  Rng rng(2);
  for (const auto& t : corpus) {
    const double e = 0.3 * rng.uniform01();
    MlmTrace tr;
    const auto r = build_mlm_record_at_rate(t, e, rng, false, &tr);
    ASSERT_EQ(r.y_mask.size(), r.y_noise.size());
    if (tr.capped) {
      ASSERT_LE(r.y_mask.mask_count(), mask_budget(t.pe.size(), e));
      ASSERT_EQ(r.y_mask.mask_count(), std::min(tr.budget, tr.error_pairs));
    } else {
      ASSERT_EQ(r.y_mask.mask_count(), tr.error_pairs);
    }
    ASSERT_NO_THROW(validate(r));
  }
}

TEST(ChooseWithoutReplacement, ExactCountAndUniform) {
  Rng rng(3);
  std::vector<int> hits(5, 0);
  for (int i = 0; i < 50000; ++i) {
    const auto c = choose_without_replacement(5, 2, rng);
    int n = 0;
    for (std::size_t k = 0; k < 5; ++k) {
      n += c[k];
      hits[k] += c[k];
    }
    ASSERT_EQ(n, 2);
  }
  for (int h : hits) EXPECT_NEAR(h / 50000.0, 0.4, 0.01);
}

TEST(BuildMlmCorpus, ThreadCountInvariant) {
  testing::ToyOptions o;
  o.records = 300;
  const auto corpus = testing::toy_triplets(o);
  const auto dist = collect_edit_rate_dist(corpus, false);
  EXPECT_EQ(build_mlm_corpus(corpus, dist, 42, false, 1),
            build_mlm_corpus(corpus, dist, 42, false, 8));
  EXPECT_TRUE(build_mlm_corpus({}, dist, 42, false, 8).empty());
}

TEST(BuildMlmCorpus, ShiftedAlignmentStillConsistent) {
  testing::ToyOptions o;
  o.records = 300;
  o.max_error = 0.8;
  const auto corpus = testing::toy_triplets(o);
  const auto dist = collect_edit_rate_dist(corpus, true);
  for (const auto& r : build_mlm_corpus(corpus, dist, 7, true, 2)) {
    ASSERT_NO_THROW(validate(r));
  }
}

}  // namespace
}  // namespace apesynth
