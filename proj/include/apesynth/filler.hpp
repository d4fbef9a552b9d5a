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

// Mask fillers. A filler turns a masked reference into a noised reference
// (the synthetic mt) by replacing every <MASK> and leaving all other tokens
// alone.
//
// NativeFiller is a context-count model trained on filler training records:
// for each mask site it tabulates the error token under the key
// (left neighbour, right neighbour) taken from y_mask, with bigram (left)
// and unigram backoff. Neighbouring <MASK> tokens are ordinary context
// symbols; sentence edges use <s> and </s>.

#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "apesynth/corpus.hpp"
#include "apesynth/error.hpp"
#include "apesynth/masker.hpp"
#include "apesynth/parallel.hpp"
#include "apesynth/rng.hpp"
#include "json.hpp"

namespace apesynth {

inline constexpr std::string_view kSentenceStart = "<s>";
inline constexpr std::string_view kSentenceEnd = "</s>";

// Frozen categorical distribution over tokens with integer counts.
class TokenCategorical {
 public:
  TokenCategorical() = default;
  explicit TokenCategorical(const std::map<std::string, std::uint64_t>& counts) {
    std::uint64_t acc = 0;
    for (const auto& [t, c] : counts) {
      if (c == 0) continue;
      acc += c;
      tokens_.push_back(t);
      counts_.push_back(c);
      cumulative_.push_back(acc);
    }
  }

  std::uint64_t total() const noexcept {
    return cumulative_.empty() ? 0 : cumulative_.back();
  }
  bool empty() const noexcept { return tokens_.empty(); }
  std::size_t size() const noexcept { return tokens_.size(); }

  double probability(std::string_view token) const {
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (tokens_[i] == token) {
        return static_cast<double>(counts_[i]) / static_cast<double>(total());
      }
    }
    return 0.0;
  }

  const std::string& sample(Rng& rng) const {
    const std::uint64_t u = rng.uniform_index(total());
    const auto it =
        std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return tokens_[static_cast<std::size_t>(it - cumulative_.begin())];
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < tokens_.size(); ++i) j[tokens_[i]] = counts_[i];
    return j;
  }

  static TokenCategorical from_json(const nlohmann::json& j) {
    std::map<std::string, std::uint64_t> counts;
    for (const auto& [t, c] : j.items()) counts[t] = c.get<std::uint64_t>();
    TokenCategorical cat(counts);
    if (cat.empty()) throw DataError("filler model has an empty categorical");
    return cat;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> counts_;
  std::vector<std::uint64_t> cumulative_;
};

struct MaskContext {
  std::string left;
  std::string right;
};

inline MaskContext mask_context(const TokenSeq& y_mask, std::size_t pos) {
  return {pos == 0 ? std::string(kSentenceStart) : y_mask[pos - 1],
          pos + 1 == y_mask.size() ? std::string(kSentenceEnd)
                                   : y_mask[pos + 1]};
}

class NativeFiller {
 public:
  using TrigramKey = std::pair<std::string, std::string>;

  const TokenCategorical* trigram(std::string_view left,
                                  std::string_view right) const {
    auto it = trigram_.find(TrigramKey(left, right));
    return it == trigram_.end() ? nullptr : &it->second;
  }
  const TokenCategorical* bigram(std::string_view left) const {
    auto it = bigram_.find(std::string(left));
    return it == bigram_.end() ? nullptr : &it->second;
  }
  const TokenCategorical& unigram() const noexcept { return unigram_; }
  std::uint64_t mask_sites() const noexcept { return unigram_.total(); }

  // Each mask is filled from its original y_mask context, left to right;
  // earlier fills do not feed later contexts.
  TokenSeq fill(const TokenSeq& y_mask, Rng& rng) const {
    std::vector<std::string> out(y_mask.begin(), y_mask.end());
    for (std::size_t i = 0; i < y_mask.size(); ++i) {
      if (y_mask[i] != kMaskToken) continue;
      const auto ctx = mask_context(y_mask, i);
      const TokenCategorical* dist = trigram(ctx.left, ctx.right);
      if (!dist) dist = bigram(ctx.left);
      if (!dist) dist = &unigram_;
      out[i] = dist->sample(rng);
    }
    return TokenSeq(std::move(out));
  }

  TokenSeq fill(const MaskedRecord& rec, Rng& rng) const {
    return fill(rec.y_mask, rng);
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["format"] = "apesynth-native-filler";
    j["version"] = 1;
    j["mask_sites"] = mask_sites();
    j["unigram"] = unigram_.to_json();
    j["bigram"] = nlohmann::ordered_json::object();
    for (const auto& [left, cat] : bigram_) j["bigram"][left] = cat.to_json();
    j["trigram"] = nlohmann::ordered_json::array();
    for (const auto& [key, cat] : trigram_) {
      j["trigram"].push_back(
          {{"left", key.first}, {"right", key.second}, {"counts", cat.to_json()}});
    }
    return j;
  }

  static NativeFiller from_json(const nlohmann::json& j) {
    try {
      if (j.at("format").get<std::string>() != "apesynth-native-filler" ||
          j.at("version").get<int>() != 1) {
        throw DataError("not a native filler model (format/version mismatch)");
      }
      NativeFiller m;
      m.unigram_ = TokenCategorical::from_json(j.at("unigram"));
      for (const auto& [left, counts] : j.at("bigram").items()) {
        m.bigram_.emplace(left, TokenCategorical::from_json(counts));
      }
      for (const auto& entry : j.at("trigram")) {
        m.trigram_.emplace(TrigramKey(entry.at("left").get<std::string>(),
                                      entry.at("right").get<std::string>()),
                           TokenCategorical::from_json(entry.at("counts")));
      }
      return m;
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed filler model: ") + e.what());
    }
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write filler model '" + path + "'");
    out << to_json().dump() << '\n';
    if (!out) throw DataError("write failed on '" + path + "'");
  }

  static NativeFiller load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      throw UsageError("filler model not found: '" + path +
                       "' (produce it with `apesynth train-filler`)");
    }
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw DataError("malformed filler model '" + path + "': " + e.what());
    }
    return from_json(j);
  }

 private:
  friend class NativeFillerTrainer;

  std::map<TrigramKey, TokenCategorical, std::less<>> trigram_;
  std::map<std::string, TokenCategorical, std::less<>> bigram_;
  TokenCategorical unigram_;
};

class NativeFillerTrainer {
 public:
  void add(const MlmTrainRecord& rec) {
    for (std::size_t i = 0; i < rec.y_mask.size(); ++i) {
      if (rec.y_mask[i] != kMaskToken) continue;
      const auto ctx = mask_context(rec.y_mask, i);
      const std::string& target = rec.y_noise[i];
      ++trigram_[{ctx.left, ctx.right}][target];
      ++bigram_[ctx.left][target];
      ++unigram_[target];
      ++sites_;
    }
  }

  std::uint64_t mask_sites() const noexcept { return sites_; }

  NativeFiller finish() const {
    if (sites_ == 0) {
      throw DataError("filler training data contains no <MASK> sites");
    }
    NativeFiller m;
    for (const auto& [key, counts] : trigram_) {
      m.trigram_.emplace(key, TokenCategorical(counts));
    }
    for (const auto& [left, counts] : bigram_) {
      m.bigram_.emplace(left, TokenCategorical(counts));
    }
    m.unigram_ = TokenCategorical(unigram_);
    return m;
  }

 private:
  using Counts = std::map<std::string, std::uint64_t>;
  std::map<std::pair<std::string, std::string>, Counts> trigram_;
  std::map<std::string, Counts> bigram_;
  Counts unigram_;
  std::uint64_t sites_ = 0;
};

inline NativeFiller train_native_filler(std::span<const MlmTrainRecord> records) {
  NativeFillerTrainer trainer;
  for (const auto& r : records) trainer.add(r);
  return trainer.finish();
}

// Checks a filled sequence against its masked input. Returns a diagnostic,
// or nullopt when the fill is valid.
inline std::optional<std::string> check_fill(const TokenSeq& masked,
                                             const TokenSeq& filled) {
  if (filled.size() != masked.size()) {
    return "length mismatch: masked has " + std::to_string(masked.size()) +
           " tokens, filled has " + std::to_string(filled.size());
  }
  for (std::size_t i = 0; i < masked.size(); ++i) {
    if (filled[i].empty()) {
      return "empty token at position " + std::to_string(i);
    }
    if (masked[i] == kMaskToken) {
      if (filled[i] == kMaskToken) {
        return "surviving <MASK> at position " + std::to_string(i);
      }
    } else if (filled[i] != masked[i]) {
      return "context token changed at position " + std::to_string(i) +
             ": '" + masked[i] + "' -> '" + filled[i] + "'";
    }
  }
  return std::nullopt;
}

struct FillOutcome {
  std::uint64_t id = 0;
  std::optional<TokenSeq> filled;
  std::string error;  // set when !filled
};

// Any mask filler: the native model or an external process.
class Filler {
 public:
  virtual ~Filler() = default;
  // One outcome per input record, in input order.
  virtual std::vector<FillOutcome> fill_batch(
      std::span<const MaskedRecord> records) = 0;
  // Fillers outside this process; their rejected fills raise ProtocolError.
  virtual bool is_external() const noexcept { return false; }
};

class NativeFillerAdapter : public Filler {
 public:
  NativeFillerAdapter(const NativeFiller& model, std::uint64_t seed,
                      unsigned threads = 1)
      : model_(model), seed_(seed), threads_(threads) {}

  std::vector<FillOutcome> fill_batch(
      std::span<const MaskedRecord> records) override {
    return parallel_map(records, threads_, [&](const MaskedRecord& r) {
      Rng rng = record_rng(seed_, r.id, Stream::kFill);
      return FillOutcome{r.id, model_.fill(r, rng), {}};
    });
  }

 private:
  const NativeFiller& model_;
  std::uint64_t seed_;
  unsigned threads_;
};

// Fills masked records and assembles <src, filled, ref> triplets. Degenerate
// (all-deletion) records are dropped when `drop_empty`, otherwise rejected.
// Rejected fills are reported together; external fillers raise
// ProtocolError, the native filler DataError.
inline std::vector<Triplet> fill_to_triplets(
    std::span<const MaskedRecord> masked, Filler& filler, bool drop_empty) {
  std::vector<MaskedRecord> kept;
  kept.reserve(masked.size());
  for (const auto& r : masked) {
    if (r.degenerate()) {
      if (drop_empty) continue;
      throw DataError("record " + std::to_string(r.id) +
                      " has an empty masked reference (every token drew a "
                      "deletion); rerun with --drop-empty");
    }
    kept.push_back(r);
  }
  auto outcomes = filler.fill_batch(kept);
  std::vector<Triplet> out;
  out.reserve(kept.size());
  std::string errors;
  std::size_t n_errors = 0;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    auto& o = outcomes[i];
    std::string error = o.error;
    if (o.filled) {
      if (auto bad = check_fill(kept[i].y_mask, *o.filled)) error = *bad;
    } else if (error.empty()) {
      error = "no fill returned";
    }
    if (!error.empty()) {
      if (++n_errors <= 10) {
        errors += "\n  record " + std::to_string(kept[i].id) + ": " + error;
      }
      continue;
    }
    out.push_back({kept[i].id, kept[i].src, std::move(*o.filled), kept[i].ref});
  }
  if (n_errors > 0) {
    if (n_errors > 10) {
      errors += "\n  ... and " + std::to_string(n_errors - 10) + " more";
    }
    const std::string msg =
        std::to_string(n_errors) + " fill(s) rejected:" + errors;
    if (filler.is_external()) throw ProtocolError(msg);
    throw DataError(msg);
  }
  return out;
}

// Masking followed by filling, per record.
inline std::vector<Triplet> synthesize_triplets(std::span<const Bitext> bitexts,
                                                const ErrorTypeDist& mu,
                                                Filler& filler,
                                                std::uint64_t seed,
                                                bool drop_empty,
                                                unsigned threads = 1) {
  const auto masked = mask_corpus(bitexts, mu, seed, threads);
  return fill_to_triplets(masked, filler, drop_empty);
}

}  // namespace apesynth
