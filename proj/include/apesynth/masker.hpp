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

// Stochastic masking of references, and the random-noise baseline.
//
// Every reference token independently draws keep / sub / ins / del from the
// error-type distribution:
//   keep  token
//   sub   <MASK>
//   ins   token <MASK>
//   del   (nothing)
// The random baseline makes the same draws but writes a vocabulary token
// where the masker writes <MASK>.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "apesynth/corpus.hpp"
#include "apesynth/parallel.hpp"
#include "apesynth/rng.hpp"
#include "apesynth/stats.hpp"

namespace apesynth {

enum class ErrorOp : std::uint8_t { kKeep, kSub, kIns, kDel };

struct ErrorOpCounts {
  std::uint64_t keep = 0;
  std::uint64_t sub = 0;
  std::uint64_t ins = 0;
  std::uint64_t del = 0;

  std::uint64_t total() const noexcept { return keep + sub + ins + del; }

  void add(ErrorOp op) noexcept {
    switch (op) {
      case ErrorOp::kKeep: ++keep; break;
      case ErrorOp::kSub: ++sub; break;
      case ErrorOp::kIns: ++ins; break;
      case ErrorOp::kDel: ++del; break;
    }
  }

  ErrorOpCounts& operator+=(const ErrorOpCounts& o) noexcept {
    keep += o.keep;
    sub += o.sub;
    ins += o.ins;
    del += o.del;
    return *this;
  }
};

// Inverse-CDF draw over (keep, sub, ins, del).
inline ErrorOp draw_error_op(const ErrorTypeDist& mu, Rng& rng) noexcept {
  const double u = rng.uniform01();
  double acc = mu.keep;
  if (u < acc) return ErrorOp::kKeep;
  acc += mu.sub;
  if (u < acc) return ErrorOp::kSub;
  acc += mu.ins;
  if (u < acc) return ErrorOp::kIns;
  // Rounding in the cumulative sum can leave a sliver above mu.del's share;
  // it falls back to the last category with positive mass.
  if (mu.del > 0.0) return ErrorOp::kDel;
  if (mu.ins > 0.0) return ErrorOp::kIns;
  if (mu.sub > 0.0) return ErrorOp::kSub;
  return ErrorOp::kKeep;
}

inline MaskedRecord mask_reference(const Bitext& b, const ErrorTypeDist& mu,
                                   Rng& rng, ErrorOpCounts* drawn = nullptr) {
  MaskedRecord out;
  out.id = b.id;
  out.src = b.src;
  out.ref = b.ref;
  out.y_mask.reserve(b.ref.size() + b.ref.size() / 4);
  for (const auto& token : b.ref) {
    const ErrorOp op = draw_error_op(mu, rng);
    if (drawn) drawn->add(op);
    switch (op) {
      case ErrorOp::kKeep:
        out.y_mask.push_back(token);
        break;
      case ErrorOp::kSub:
        out.y_mask.push_back(std::string(kMaskToken));
        break;
      case ErrorOp::kIns:
        out.y_mask.push_back(token);
        out.y_mask.push_back(std::string(kMaskToken));
        break;
      case ErrorOp::kDel:
        break;
    }
  }
  return out;
}

inline std::vector<MaskedRecord> mask_corpus(std::span<const Bitext> bitexts,
                                             const ErrorTypeDist& mu,
                                             std::uint64_t seed,
                                             unsigned threads = 1) {
  mu.validate();
  return parallel_map_collect(bitexts, threads, [&](const Bitext& b) {
    Rng rng = record_rng(seed, b.id, Stream::kMask);
    return mask_reference(b, mu, rng);
  });
}

// Target-side token multiset; draws are proportional to frequency.
class TokenVocab {
 public:
  void add(const TokenSeq& seq) {
    for (const auto& t : seq) ++counts_[t];
    frozen_ = false;
  }

  std::uint64_t total() const noexcept {
    std::uint64_t n = 0;
    for (const auto& [_, c] : counts_) n += c;
    return n;
  }
  std::size_t distinct() const noexcept { return counts_.size(); }
  bool empty() const noexcept { return counts_.empty(); }

  // Must be called after the last add() and before sample().
  void freeze() {
    tokens_.clear();
    cumulative_.clear();
    std::uint64_t acc = 0;
    for (const auto& [t, c] : counts_) {
      acc += c;
      tokens_.push_back(t);
      cumulative_.push_back(acc);
    }
    frozen_ = true;
  }

  const std::string& sample(Rng& rng) const {
    if (!frozen_ || tokens_.empty()) {
      throw DataError("token vocabulary is empty or not frozen");
    }
    const std::uint64_t u = rng.uniform_index(cumulative_.back());
    const auto it =
        std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return tokens_[static_cast<std::size_t>(it - cumulative_.begin())];
  }

 private:
  std::map<std::string, std::uint64_t> counts_;
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> cumulative_;
  bool frozen_ = false;
};

// Random-noise triplet <src, noised ref, ref>.
inline Triplet rand_noise(const Bitext& b, const ErrorTypeDist& mu,
                          const TokenVocab& vocab, Rng& rng,
                          ErrorOpCounts* drawn = nullptr) {
  if (vocab.empty()) throw DataError("random noising needs a non-empty vocabulary");
  Triplet out;
  out.id = b.id;
  out.src = b.src;
  out.pe = b.ref;
  for (const auto& token : b.ref) {
    const ErrorOp op = draw_error_op(mu, rng);
    if (drawn) drawn->add(op);
    switch (op) {
      case ErrorOp::kKeep:
        out.mt.push_back(token);
        break;
      case ErrorOp::kSub:
        out.mt.push_back(vocab.sample(rng));
        break;
      case ErrorOp::kIns:
        out.mt.push_back(token);
        out.mt.push_back(vocab.sample(rng));
        break;
      case ErrorOp::kDel:
        break;
    }
  }
  return out;
}

}  // namespace apesynth
