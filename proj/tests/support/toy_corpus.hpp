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

// Seeded toy corpora. Gold and translation triplets are made by corrupting
// a random reference with substitutions, insertions, deletions and swaps of
// adjacent tokens.

#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "apesynth/corpus.hpp"
#include "apesynth/rng.hpp"

namespace apesynth::testing {

struct ToyOptions {
  std::size_t records = 100;
  std::size_t vocab = 300;
  std::size_t min_len = 5;
  std::size_t max_len = 20;
  double max_error = 0.5;  // per-sentence corruption rate ~ U[0, max_error]
  std::uint64_t seed = 1;
};

inline std::string toy_word(char prefix, std::uint64_t k) {
  return std::string(1, prefix) + std::to_string(k);
}

inline TokenSeq random_sentence(Rng& rng, char prefix, std::size_t vocab,
                                std::size_t min_len, std::size_t max_len) {
  TokenSeq s;
  const std::size_t len = min_len + rng.uniform_index(max_len - min_len + 1);
  for (std::size_t i = 0; i < len; ++i) s.push_back(toy_word(prefix, rng.uniform_index(vocab)));
  return s;
}

inline TokenSeq corrupt(const TokenSeq& clean, double rate, Rng& rng,
                        std::size_t vocab) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (rng.uniform01() >= rate) {
      out.push_back(clean[i]);
      continue;
    }
    const double u = rng.uniform01();
    if (u < 0.5) {
      out.push_back(toy_word('w', rng.uniform_index(vocab)));
    } else if (u < 0.7) {
      out.push_back(clean[i]);
      out.push_back(toy_word('w', rng.uniform_index(vocab)));
    } else if (u < 0.9) {
      // deletion
    } else if (i + 1 < clean.size()) {
      out.push_back(clean[i + 1]);
      out.push_back(clean[i]);
      ++i;
    } else {
      out.push_back(clean[i]);
    }
  }
  if (out.empty()) out.push_back(toy_word('w', rng.uniform_index(vocab)));
  return TokenSeq(std::move(out));
}

inline std::vector<Triplet> toy_triplets(const ToyOptions& o) {
  Rng rng(o.seed);
  std::vector<Triplet> out;
  out.reserve(o.records);
  for (std::size_t i = 0; i < o.records; ++i) {
    Triplet t;
    t.id = i;
    t.src = random_sentence(rng, 's', o.vocab, o.min_len, o.max_len);
    t.pe = random_sentence(rng, 'w', o.vocab, o.min_len, o.max_len);
    t.mt = corrupt(t.pe, o.max_error * rng.uniform01(), rng, o.vocab);
    out.push_back(std::move(t));
  }
  return out;
}

inline std::vector<Bitext> toy_bitexts(const ToyOptions& o) {
  Rng rng(o.seed ^ 0x5bd1e995ULL);
  std::vector<Bitext> out;
  out.reserve(o.records);
  for (std::size_t i = 0; i < o.records; ++i) {
    Bitext b;
    b.id = i;
    b.src = random_sentence(rng, 's', o.vocab, o.min_len, o.max_len);
    b.ref = random_sentence(rng, 'w', o.vocab, o.min_len, o.max_len);
    out.push_back(std::move(b));
  }
  return out;
}

// Translation triplets <src, corrupted ref, ref> over given bitexts.
inline std::vector<Triplet> toy_translations(const std::vector<Bitext>& bitexts,
                                             double max_error, std::uint64_t seed,
                                             std::size_t vocab = 300) {
  Rng rng(seed);
  std::vector<Triplet> out;
  out.reserve(bitexts.size());
  for (const auto& b : bitexts) {
    out.push_back({b.id, b.src, corrupt(b.ref, max_error * rng.uniform01(), rng, vocab), b.ref});
  }
  return out;
}

}  // namespace apesynth::testing
