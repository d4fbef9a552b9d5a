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

// Word-level edit alignment and translation edit rate.
//
// The generic core in `apesynth::align` works on any equality-comparable
// token type; the TokenSeq front end interns strings to integers first.
// Comparison is exact, hence case-sensitive.

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "apesynth/corpus.hpp"
#include "apesynth/error.hpp"

namespace apesynth {

enum class EditKind : std::uint8_t { kMatch, kSub, kIns, kDel };

inline std::string_view to_string(EditKind k) noexcept {
  switch (k) {
    case EditKind::kMatch: return "match";
    case EditKind::kSub: return "sub";
    case EditKind::kIns: return "ins";
    case EditKind::kDel: return "del";
  }
  return "?";
}

struct OpCounts {
  std::size_t match = 0;
  std::size_t sub = 0;
  std::size_t ins = 0;
  std::size_t del = 0;

  std::size_t total() const noexcept { return match + sub + ins + del; }
  std::size_t errors() const noexcept { return sub + ins + del; }

  void add(EditKind k) noexcept {
    switch (k) {
      case EditKind::kMatch: ++match; break;
      case EditKind::kSub: ++sub; break;
      case EditKind::kIns: ++ins; break;
      case EditKind::kDel: ++del; break;
    }
  }

  OpCounts& operator+=(const OpCounts& o) noexcept {
    match += o.match;
    sub += o.sub;
    ins += o.ins;
    del += o.del;
    return *this;
  }

  friend bool operator==(const OpCounts&, const OpCounts&) = default;
};

// Block-shift search bounds (tercom defaults).
struct ShiftLimits {
  std::size_t max_block = 10;
  std::size_t max_distance = 50;
};

namespace align {

inline constexpr std::uint32_t kNoPos = UINT32_MAX;

// Index-level edit step. Ins has no ref_pos, Del has no hyp_pos.
struct Step {
  EditKind kind;
  std::uint32_t ref_pos;
  std::uint32_t hyp_pos;

  friend bool operator==(const Step&, const Step&) = default;
};

// Unit-cost Levenshtein distance, two rolling rows.
template <typename T>
std::size_t distance(std::span<const T> hyp, std::span<const T> ref) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  std::vector<std::uint32_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<std::uint32_t>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<std::uint32_t>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      const std::uint32_t diag = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min({diag, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

// Minimum-cost trace. Backtrace runs from the end and prefers
// Match > Sub > Del > Ins among optimal predecessors.
template <typename T>
std::vector<Step> steps(std::span<const T> hyp, std::span<const T> ref) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  const std::size_t w = m + 1;
  std::vector<std::uint32_t> d((n + 1) * w);
  for (std::size_t j = 0; j <= m; ++j) d[j] = static_cast<std::uint32_t>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    d[i * w] = static_cast<std::uint32_t>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      const std::uint32_t diag =
          d[(i - 1) * w + j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      d[i * w + j] =
          std::min({diag, d[(i - 1) * w + j] + 1, d[i * w + j - 1] + 1});
    }
  }

  std::vector<Step> out;
  out.reserve(n + m);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const std::uint32_t here = d[i * w + j];
    if (i > 0 && j > 0) {
      const std::uint32_t diag = d[(i - 1) * w + j - 1];
      const bool same = ref[i - 1] == hyp[j - 1];
      if (same && here == diag) {
        out.push_back({EditKind::kMatch, static_cast<std::uint32_t>(i - 1),
                       static_cast<std::uint32_t>(j - 1)});
        --i, --j;
        continue;
      }
      if (!same && here == diag + 1) {
        out.push_back({EditKind::kSub, static_cast<std::uint32_t>(i - 1),
                       static_cast<std::uint32_t>(j - 1)});
        --i, --j;
        continue;
      }
    }
    if (i > 0 && here == d[(i - 1) * w + j] + 1) {
      out.push_back({EditKind::kDel, static_cast<std::uint32_t>(i - 1), kNoPos});
      --i;
      continue;
    }
    out.push_back({EditKind::kIns, kNoPos, static_cast<std::uint32_t>(j - 1)});
    --j;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

// Moves src[start, start+len) so it begins at `insert_at` of the remainder.
template <typename V>
void build_shifted(const std::vector<V>& src, std::size_t start,
                   std::size_t len, std::size_t insert_at, std::vector<V>& out) {
  out.clear();
  out.reserve(src.size());
  std::vector<V> rest;
  rest.reserve(src.size() - len);
  rest.insert(rest.end(), src.begin(), src.begin() + start);
  rest.insert(rest.end(), src.begin() + start + len, src.end());
  out.insert(out.end(), rest.begin(), rest.begin() + insert_at);
  out.insert(out.end(), src.begin() + start, src.begin() + start + len);
  out.insert(out.end(), rest.begin() + insert_at, rest.end());
}

template <typename T>
struct ShiftOutcome {
  std::vector<T> hyp;                // hypothesis after all shifts
  std::vector<std::uint32_t> order;  // order[k] = original index of hyp[k]
  std::size_t shifts = 0;
};

// Greedy block-shift search. Each round considers moving a hypothesis block
// that also occurs in the reference to the hypothesis position aligned with
// that reference occurrence; the candidate with the largest drop in edit
// distance is applied if the drop exceeds the unit shift cost. Ties keep the
// first candidate in (start, length, ref position) order.
template <typename T>
ShiftOutcome<T> shift_search(std::span<const T> hyp, std::span<const T> ref,
                             const ShiftLimits& limits = {}) {
  ShiftOutcome<T> cur{{hyp.begin(), hyp.end()}, {}, 0};
  cur.order.resize(hyp.size());
  for (std::size_t k = 0; k < hyp.size(); ++k) {
    cur.order[k] = static_cast<std::uint32_t>(k);
  }
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  std::vector<T> candidate(m);

  while (true) {
    const auto trace = steps<T>(cur.hyp, ref);
    std::size_t cur_dist = 0;
    std::vector<std::uint32_t> hyp_before(n, 0);
    std::vector<char> hyp_matched(m, 0), ref_matched(n, 0);
    std::uint32_t consumed = 0;
    for (const auto& s : trace) {
      if (s.kind != EditKind::kMatch) ++cur_dist;
      if (s.ref_pos != kNoPos) hyp_before[s.ref_pos] = consumed;
      if (s.kind == EditKind::kMatch) {
        hyp_matched[s.hyp_pos] = 1;
        ref_matched[s.ref_pos] = 1;
      }
      if (s.hyp_pos != kNoPos) ++consumed;
    }
    if (cur_dist <= 1) break;

    std::size_t best_gain = 1;
    std::size_t best_start = 0, best_len = 0, best_dest = 0;
    for (std::size_t start = 0; start < m; ++start) {
      for (std::size_t r = 0; r < n; ++r) {
        std::size_t len = 0;
        bool all_hyp_matched = true, all_ref_matched = true;
        while (len < limits.max_block && start + len < m && r + len < n &&
               cur.hyp[start + len] == ref[r + len]) {
          all_hyp_matched &= hyp_matched[start + len] != 0;
          all_ref_matched &= ref_matched[r + len] != 0;
          ++len;
          if (all_hyp_matched || all_ref_matched) continue;
          const std::size_t dest = hyp_before[r];
          if (dest >= start && dest <= start + len) continue;
          const std::size_t moved = dest > start ? dest - start : start - dest;
          if (moved > limits.max_distance) continue;
          // Remove [start, start+len), reinsert so the block begins at the
          // position aligned with ref[r].
          const std::size_t insert_at = dest > start ? dest - len : dest;
          build_shifted(cur.hyp, start, len, insert_at, candidate);
          const std::size_t d = distance<T>(candidate, ref);
          if (d < cur_dist && cur_dist - d > best_gain) {
            best_gain = cur_dist - d;
            best_start = start;
            best_len = len;
            best_dest = insert_at;
          }
        }
      }
    }
    if (best_len == 0) break;
    build_shifted(cur.hyp, best_start, best_len, best_dest, candidate);
    cur.hyp = candidate;
    std::vector<std::uint32_t> order(m);
    build_shifted(cur.order, best_start, best_len, best_dest, order);
    cur.order = std::move(order);
    ++cur.shifts;
  }
  return cur;
}

// Maps the union vocabulary of two token sequences to dense integers.
inline std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>>
intern(const TokenSeq& hyp, const TokenSeq& ref) {
  std::unordered_map<std::string_view, std::uint32_t> ids;
  ids.reserve(hyp.size() + ref.size());
  auto map = [&](const TokenSeq& seq) {
    std::vector<std::uint32_t> out;
    out.reserve(seq.size());
    for (const auto& t : seq) {
      auto [it, inserted] =
          ids.try_emplace(t, static_cast<std::uint32_t>(ids.size()));
      out.push_back(it->second);
    }
    return out;
  };
  auto h = map(hyp);
  auto r = map(ref);
  return {std::move(h), std::move(r)};
}

}  // namespace align

// One operation of an alignment trace. Match/Sub carry both sides, Ins only
// the hypothesis side, Del only the reference side. hyp_pos indexes the
// hypothesis after any block shifts.
struct EditOp {
  EditKind kind = EditKind::kMatch;
  std::optional<std::string> ref_token;
  std::optional<std::string> hyp_token;
  std::optional<std::size_t> ref_pos;
  std::optional<std::size_t> hyp_pos;

  friend bool operator==(const EditOp&, const EditOp&) = default;
};

struct Alignment {
  std::vector<EditOp> ops;
  std::size_t distance = 0;     // non-match ops + shift_count
  std::size_t shift_count = 0;

  OpCounts counts() const noexcept {
    OpCounts c;
    for (const auto& op : ops) c.add(op.kind);
    return c;
  }
};

struct TerResult {
  std::size_t edits = 0;
  std::size_t ref_len = 0;
  double rate = 0.0;
};

namespace detail {

inline void require_nonempty(const TokenSeq& hyp, const TokenSeq& ref) {
  if (hyp.empty()) throw DataError("alignment requires a non-empty hypothesis");
  if (ref.empty()) throw DataError("alignment requires a non-empty reference");
}

inline Alignment make_alignment(const std::vector<align::Step>& trace,
                                const TokenSeq& ref,
                                const std::vector<const std::string*>& hyp,
                                std::size_t shifts) {
  Alignment a;
  a.shift_count = shifts;
  a.ops.reserve(trace.size());
  for (const auto& s : trace) {
    EditOp op;
    op.kind = s.kind;
    if (s.ref_pos != align::kNoPos) {
      op.ref_pos = s.ref_pos;
      op.ref_token = ref[s.ref_pos];
    }
    if (s.hyp_pos != align::kNoPos) {
      op.hyp_pos = s.hyp_pos;
      op.hyp_token = *hyp[s.hyp_pos];
    }
    if (s.kind != EditKind::kMatch) ++a.distance;
    a.ops.push_back(std::move(op));
  }
  a.distance += shifts;
  return a;
}

}  // namespace detail

inline Alignment levenshtein_align(const TokenSeq& hyp, const TokenSeq& ref) {
  detail::require_nonempty(hyp, ref);
  const auto [h, r] = align::intern(hyp, ref);
  const auto trace = align::steps<std::uint32_t>(h, r);
  std::vector<const std::string*> hyp_tokens;
  hyp_tokens.reserve(hyp.size());
  for (const auto& t : hyp) hyp_tokens.push_back(&t);
  return detail::make_alignment(trace, ref, hyp_tokens, 0);
}

inline Alignment ter_align(const TokenSeq& hyp, const TokenSeq& ref,
                           bool allow_shifts,
                           const ShiftLimits& limits = {}) {
  if (!allow_shifts) return levenshtein_align(hyp, ref);
  detail::require_nonempty(hyp, ref);
  const auto [h, r] = align::intern(hyp, ref);
  const auto shifted = align::shift_search<std::uint32_t>(h, r, limits);
  const auto trace = align::steps<std::uint32_t>(shifted.hyp, r);
  std::vector<const std::string*> hyp_tokens;
  hyp_tokens.reserve(hyp.size());
  for (auto idx : shifted.order) hyp_tokens.push_back(&hyp[idx]);
  return detail::make_alignment(trace, ref, hyp_tokens, shifted.shifts);
}

// Edit count without materializing the trace.
inline std::size_t ter_edits(const TokenSeq& hyp, const TokenSeq& ref,
                             bool allow_shifts,
                             const ShiftLimits& limits = {}) {
  detail::require_nonempty(hyp, ref);
  const auto [h, r] = align::intern(hyp, ref);
  if (!allow_shifts) return align::distance<std::uint32_t>(h, r);
  const auto shifted = align::shift_search<std::uint32_t>(h, r, limits);
  return shifted.shifts + align::distance<std::uint32_t>(shifted.hyp, r);
}

inline TerResult edit_rate(const TokenSeq& hyp, const TokenSeq& ref,
                           bool allow_shifts) {
  TerResult res;
  res.edits = ter_edits(hyp, ref, allow_shifts);
  res.ref_len = ref.size();
  res.rate = static_cast<double>(res.edits) / static_cast<double>(res.ref_len);
  return res;
}

}  // namespace apesynth
