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

// Filler training data from translation triplets <src, mt, ref>.
//
// The mt-ref alignment marks substitution and insertion sites in ref; those
// sites become <MASK> in y_mask and carry the aligned mt token in y_noise.
// Deletion sites are never masked. When the triplet's edit rate exceeds a
// rate drawn from the gold distribution, only ceil(|ref| * drawn_rate)
// randomly chosen sites are masked.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apesynth/corpus.hpp"
#include "apesynth/edit_align.hpp"
#include "apesynth/parallel.hpp"
#include "apesynth/rng.hpp"
#include "apesynth/stats.hpp"

namespace apesynth {

// A substitution or insertion site of the alignment.
struct ErrorPair {
  std::optional<std::string> ref_token;  // empty for insertions
  std::string mt_token;
  std::size_t ref_pos = 0;   // ref tokens preceding the site
  std::size_t op_index = 0;  // index into Alignment::ops
};

inline std::vector<ErrorPair> error_pairs(const Alignment& a) {
  std::vector<ErrorPair> pairs;
  std::size_t ref_seen = 0;
  for (std::size_t k = 0; k < a.ops.size(); ++k) {
    const auto& op = a.ops[k];
    if (op.kind == EditKind::kSub || op.kind == EditKind::kIns) {
      pairs.push_back({op.ref_token, *op.hyp_token, ref_seen, k});
    }
    if (op.ref_pos) ++ref_seen;
  }
  return pairs;
}

// ceil(ref_len * rate). The epsilon keeps products such as 10 * 0.3
// (= 3.0000000000000004) from rounding up to the next integer.
inline std::size_t mask_budget(std::size_t ref_len, double rate) noexcept {
  const double x = static_cast<double>(ref_len) * rate;
  if (!(x > 1e-9)) return 0;
  return static_cast<std::size_t>(std::ceil(x - 1e-9));
}

// Bookkeeping of one record construction, for checks and reports.
struct MlmTrace {
  double sampled_rate = 0.0;
  double observed_rate = 0.0;
  bool capped = false;
  std::size_t budget = 0;  // meaningful when capped
  std::size_t error_pairs = 0;
  std::size_t masked_sub = 0;
  std::size_t masked_ins = 0;
};

// Uniform choice of k distinct indices out of n (partial Fisher-Yates).
inline std::vector<char> choose_without_replacement(std::size_t n,
                                                    std::size_t k, Rng& rng) {
  std::vector<char> chosen(n, 0);
  if (k >= n) {
    std::fill(chosen.begin(), chosen.end(), 1);
    return chosen;
  }
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.uniform_index(n - i);
    std::swap(idx[i], idx[j]);
    chosen[idx[i]] = 1;
  }
  return chosen;
}

// Record construction with an explicit sampled rate.
inline MlmTrainRecord build_mlm_record_at_rate(const Triplet& t,
                                               double sampled_rate, Rng& rng,
                                               bool allow_shifts,
                                               MlmTrace* trace = nullptr) {
  const Alignment a = ter_align(t.mt, t.pe, allow_shifts);
  const double observed =
      static_cast<double>(a.distance) / static_cast<double>(t.pe.size());
  const auto pairs = error_pairs(a);

  MlmTrace tr;
  tr.sampled_rate = sampled_rate;
  tr.observed_rate = observed;
  tr.error_pairs = pairs.size();

  std::vector<char> chosen_pair;
  if (observed > sampled_rate) {
    tr.capped = true;
    tr.budget = mask_budget(t.pe.size(), sampled_rate);
    chosen_pair = choose_without_replacement(pairs.size(), tr.budget, rng);
  } else {
    chosen_pair.assign(pairs.size(), 1);
  }
  std::vector<char> chosen_op(a.ops.size(), 0);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    if (chosen_pair[p]) chosen_op[pairs[p].op_index] = 1;
  }

  MlmTrainRecord rec;
  rec.id = t.id;
  rec.src = t.src;
  rec.y_mask.reserve(t.pe.size() + pairs.size());
  rec.y_noise.reserve(t.pe.size() + pairs.size());
  for (std::size_t k = 0; k < a.ops.size(); ++k) {
    const auto& op = a.ops[k];
    if (chosen_op[k]) {
      rec.y_mask.push_back(std::string(kMaskToken));
      rec.y_noise.push_back(*op.hyp_token);
      (op.kind == EditKind::kSub ? tr.masked_sub : tr.masked_ins)++;
    } else if (op.ref_token) {
      rec.y_mask.push_back(*op.ref_token);
      rec.y_noise.push_back(*op.ref_token);
    }
  }
  if (trace) *trace = tr;
  return rec;
}

inline MlmTrainRecord build_mlm_record(const Triplet& t,
                                       const EditRateDist& dist, Rng& rng,
                                       bool allow_shifts,
                                       MlmTrace* trace = nullptr) {
  const double e = sample_edit_rate(dist, rng);
  return build_mlm_record_at_rate(t, e, rng, allow_shifts, trace);
}

// Per-record generators are keyed by (seed, id), so output is independent of
// the worker count.
inline std::vector<MlmTrainRecord> build_mlm_corpus(
    std::span<const Triplet> triplets, const EditRateDist& dist,
    std::uint64_t seed, bool allow_shifts, unsigned threads = 1) {
  return parallel_map_collect(triplets, threads, [&](const Triplet& t) {
    Rng rng = record_rng(seed, t.id, Stream::kMlmData);
    return build_mlm_record(t, dist, rng, allow_shifts);
  });
}

}  // namespace apesynth
