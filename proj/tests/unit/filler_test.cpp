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

#include "apesynth/error.hpp"
#include "apesynth/filler.hpp"
#include "apesynth/masker.hpp"
#include "apesynth/mlm_data.hpp"
#include "apesynth/rng.hpp"
#include "support/temp_dir.hpp"
#include "support/toy_corpus.hpp"

namespace apesynth {
namespace {

MlmTrainRecord mlm(TokenSeq y_mask, TokenSeq y_noise) {
  return {0, {"s"}, std::move(y_mask), std::move(y_noise)};
}

TEST(NativeFillerTrainer, DirectTabulation) {
  const std::vector<MlmTrainRecord> data = {mlm({"A", "<MASK>", "C"}, {"A", "X", "C"})};
  const auto m = train_native_filler(data);
  const auto* tri = m.trigram("A", "C");
  ASSERT_NE(tri, nullptr);
  EXPECT_EQ(tri->probability("X"), 1.0);
  EXPECT_EQ(m.unigram().probability("X"), 1.0);
  EXPECT_EQ(m.unigram().total(), 1u);
  EXPECT_EQ(m.mask_sites(), 1u);
}

TEST(NativeFillerTrainer, TwoTargetsSameContext) {
  const std::vector<MlmTrainRecord> data = {mlm({"A", "<MASK>", "C"}, {"A", "X", "C"}),
                                            mlm({"A", "<MASK>", "C"}, {"A", "Y", "C"})};
  const auto m = train_native_filler(data);
  const auto* tri = m.trigram("A", "C");
  ASSERT_NE(tri, nullptr);
  EXPECT_EQ(tri->probability("X"), 0.5);
  EXPECT_EQ(tri->probability("Y"), 0.5);
}

TEST(NativeFillerTrainer, SentenceBoundaryContext) {
  const std::vector<MlmTrainRecord> data = {mlm({"<MASK>", "b", "<MASK>"}, {"x", "b", "y"})};
  const auto m = train_native_filler(data);
  ASSERT_NE(m.trigram("<s>", "b"), nullptr);
  ASSERT_NE(m.trigram("b", "</s>"), nullptr);
  EXPECT_EQ(m.trigram("b", "</s>")->probability("y"), 1.0);
}

TEST(NativeFillerTrainer, NoMasksIsAnError) {
  const std::vector<MlmTrainRecord> data = {mlm({"a", "b"}, {"a", "b"})};
  EXPECT_THROW(train_native_filler(data), DataError);
  EXPECT_THROW(train_native_filler({}), DataError);
}

TEST(NativeFiller, NoMasksIsVerbatim) {
  const std::vector<MlmTrainRecord> data = {mlm({"A", "<MASK>", "C"}, {"A", "X", "C"})};
  const auto m = train_native_filler(data);
  Rng rng(1);
  const TokenSeq plain{"p", "q", "r"};
  EXPECT_EQ(m.fill(plain, rng), plain);
}

TEST(NativeFiller, DeterministicCategorical) {
  const std::vector<MlmTrainRecord> data = {mlm({"A", "<MASK>", "C"}, {"A", "X", "C"})};
  const auto m = train_native_filler(data);
  Rng rng(1);
  EXPECT_EQ(m.fill(TokenSeq{"A", "<MASK>", "C"}, rng), (TokenSeq{"A", "X", "C"}));
}

TEST(NativeFiller, SampledFrequency) {
  std::vector<MlmTrainRecord> data;
  for (int i = 0; i < 7; ++i) data.push_back(mlm({"A", "<MASK>", "C"}, {"A", "X", "C"}));
  for (int i = 0; i < 3; ++i) data.push_back(mlm({"A", "<MASK>", "C"}, {"A", "Y", "C"}));
  const auto m = train_native_filler(data);
  Rng rng(2);
  int x = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) x += m.fill(TokenSeq{"A", "<MASK>", "C"}, rng)[1] == "X";
  EXPECT_NEAR(x / double(n), 0.7, 0.02);
}

TEST(NativeFiller, BacksOffToBigramThenUnigram) {
  const std::vector<MlmTrainRecord> data = {mlm({"A", "<MASK>", "C"}, {"A", "X", "C"}),
                                            mlm({"B", "<MASK>", "D"}, {"B", "Y", "D"})};
  const auto m = train_native_filler(data);
  Rng rng(3);
  // Unseen right context, seen left: bigram on A.
  EXPECT_EQ(m.fill(TokenSeq{"A", "<MASK>", "Q"}, rng)[1], "X");
  // Nothing seen: unigram over {X, Y}.
  const auto f = m.fill(TokenSeq{"Q", "<MASK>", "R"}, rng)[1];
  EXPECT_TRUE(f == "X" || f == "Y");
}

TEST(NativeFiller, SaveLoadRoundTrip) {
  testing::TempDir dir;
  const std::vector<MlmTrainRecord> data = {mlm({"A", "<MASK>", "C"}, {"A", "X", "C"}),
                                            mlm({"<MASK>", "D"}, {"Y", "D"})};
  const auto m = train_native_filler(data);
  m.save(dir.file("m.json"));
  const auto back = NativeFiller::load(dir.file("m.json"));
  EXPECT_EQ(back.to_json().dump(), m.to_json().dump());
  EXPECT_THROW(NativeFiller::load(dir.file("missing.json")), UsageError);
}

TEST(CheckFill, Diagnostics) {
  const TokenSeq masked{"a", "<MASK>", "c"};
  EXPECT_FALSE(check_fill(masked, {"a", "UNK", "c"}));
  EXPECT_NE(check_fill(masked, masked)->find("surviving <MASK>"), std::string::npos);
  EXPECT_NE(check_fill(masked, {"a", "UNK"})->find("length mismatch"), std::string::npos);
  EXPECT_NE(check_fill(masked, {"z", "UNK", "c"})->find("context token changed"),
            std::string::npos);
}

class FixedFiller : public Filler {
 public:
  explicit FixedFiller(bool external) : external_(external) {}
  std::vector<FillOutcome> fill_batch(std::span<const MaskedRecord> records) override {
    std::vector<FillOutcome> out;
    for (const auto& r : records) out.push_back({r.id, r.y_mask, {}});  // leaves masks
    return out;
  }
  bool is_external() const noexcept override { return external_; }

 private:
  bool external_;
};

TEST(FillToTriplets, RejectedFillsRaiseByFillerKind) {
  const std::vector<MaskedRecord> masked = {{0, {"s"}, {"a", "b"}, {"a", "<MASK>"}}};
  FixedFiller native(false), external(true);
  EXPECT_THROW(fill_to_triplets(masked, native, false), DataError);
  EXPECT_THROW(fill_to_triplets(masked, external, false), ProtocolError);
}

TEST(Synthesize, ZeroNoiseIsIdentity) {
  testing::ToyOptions o;
  const auto bitexts = testing::toy_bitexts(o);
  const std::vector<MlmTrainRecord> data = {mlm({"A", "<MASK>", "C"}, {"A", "X", "C"})};
  const auto model = train_native_filler(data);
  NativeFillerAdapter filler(model, 1);
  const auto out = synthesize_triplets(bitexts, {1, 0, 0, 0}, filler, 5, false);
  ASSERT_EQ(out.size(), bitexts.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out[i].mt, bitexts[i].ref);
    EXPECT_EQ(out[i].pe, bitexts[i].ref);
    EXPECT_EQ(out[i].src, bitexts[i].src);
  }
}

TEST(Synthesize, DeletionOnly) {
  testing::ToyOptions o;
  o.records = 20;
  const auto bitexts = testing::toy_bitexts(o);
  const std::vector<MlmTrainRecord> data = {mlm({"A", "<MASK>", "C"}, {"A", "X", "C"})};
  const auto model = train_native_filler(data);
  NativeFillerAdapter filler(model, 1);
  EXPECT_TRUE(synthesize_triplets(bitexts, {0, 0, 0, 1}, filler, 5, true).empty());
  EXPECT_THROW(synthesize_triplets(bitexts, {0, 0, 0, 1}, filler, 5, false), DataError);
}

TEST(Synthesize, MeanRateTracksErrorMass) {
  testing::ToyOptions o;
  o.records = 500;
  o.seed = 31;
  const auto gold = testing::toy_triplets(o);
  const auto stats = collect_gold_stats(gold, false);
  const auto mlm_data = build_mlm_corpus(gold, stats.rates, 1, false);
  const auto model = train_native_filler(mlm_data);
  NativeFillerAdapter filler(model, 2);
  const auto bitexts = testing::toy_bitexts(o);
  const auto out = synthesize_triplets(bitexts, stats.mu, filler, 3, true);
  double sum = 0.0;
  for (const auto& t : out) sum += edit_rate(t.mt, t.pe, false).rate;
  const double target = stats.mu.sub + stats.mu.ins + stats.mu.del;
  EXPECT_NEAR(sum / out.size(), target, 0.15 * target);
}

}  // namespace
}  // namespace apesynth
