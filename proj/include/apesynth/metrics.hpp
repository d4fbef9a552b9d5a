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

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "apesynth/corpus.hpp"
#include "apesynth/edit_align.hpp"
#include "apesynth/error.hpp"
#include "apesynth/parallel.hpp"
#include "apesynth/stats.hpp"
#include "json.hpp"

namespace apesynth {

struct TerScore {
  std::uint64_t edits = 0;
  std::uint64_t ref_len = 0;
  double percent = 0.0;  // 100 * edits / ref_len
};

inline void check_same_length(std::size_t hyps, std::size_t refs) {
  if (hyps != refs) {
    throw DataError("hypothesis and reference corpora differ in length: " +
                    std::to_string(hyps) + " vs " + std::to_string(refs));
  }
}

// Corpus TER: total edits over total reference length.
inline TerScore corpus_ter(std::span<const TokenSeq> hyps,
                           std::span<const TokenSeq> refs, bool allow_shifts,
                           unsigned threads = 1) {
  check_same_length(hyps.size(), refs.size());
  std::vector<std::uint64_t> edits(hyps.size());
  parallel_for(hyps.size(), threads, [&](std::size_t i) {
    if (refs[i].empty()) {
      throw DataError("empty reference at segment " + std::to_string(i + 1));
    }
    // An empty hypothesis needs one deletion per reference token.
    edits[i] = hyps[i].empty() ? refs[i].size()
                               : ter_edits(hyps[i], refs[i], allow_shifts);
  });
  TerScore s;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    s.edits += edits[i];
    s.ref_len += refs[i].size();
  }
  if (s.ref_len > 0) {
    s.percent = 100.0 * static_cast<double>(s.edits) / static_cast<double>(s.ref_len);
  }
  return s;
}

struct BleuScore {
  double score = 0.0;  // [0, 100]
  std::array<std::uint64_t, 4> matches{};
  std::array<std::uint64_t, 4> totals{};
  double brevity_penalty = 0.0;
  std::uint64_t hyp_len = 0;
  std::uint64_t ref_len = 0;

  double precision(std::size_t n) const noexcept {
    return totals[n] ? static_cast<double>(matches[n]) / static_cast<double>(totals[n])
                     : 0.0;
  }
};

namespace detail {

using NgramCounts = std::map<std::vector<std::string_view>, std::uint64_t>;

inline NgramCounts ngrams(const TokenSeq& seq, std::size_t n) {
  NgramCounts counts;
  if (seq.size() < n) return counts;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    std::vector<std::string_view> g;
    g.reserve(n);
    for (std::size_t k = 0; k < n; ++k) g.emplace_back(seq[i + k]);
    ++counts[g];
  }
  return counts;
}

}  // namespace detail

// Corpus BLEU-4, single reference, clipped n-gram precision, brevity
// penalty, no smoothing.
inline BleuScore corpus_bleu(std::span<const TokenSeq> hyps,
                             std::span<const TokenSeq> refs) {
  check_same_length(hyps.size(), refs.size());
  BleuScore b;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    b.hyp_len += hyps[i].size();
    b.ref_len += refs[i].size();
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto h = detail::ngrams(hyps[i], n);
      const auto r = detail::ngrams(refs[i], n);
      for (const auto& [g, c] : h) {
        b.totals[n - 1] += c;
        if (auto it = r.find(g); it != r.end()) {
          b.matches[n - 1] += std::min(c, it->second);
        }
      }
    }
  }
  if (b.hyp_len == 0) return b;
  b.brevity_penalty =
      b.hyp_len < b.ref_len
          ? std::exp(1.0 - static_cast<double>(b.ref_len) / static_cast<double>(b.hyp_len))
          : 1.0;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    if (b.matches[n] == 0) return b;
    log_sum += std::log(b.precision(n));
  }
  b.score = 100.0 * b.brevity_penalty * std::exp(log_sum / 4.0);
  return b;
}

// One labelled edit-rate distribution.
struct DistSeries {
  std::string label;
  EditRateDist dist;
};

inline DistSeries distribution_series(std::string label,
                                      std::span<const TokenSeq> hyps,
                                      std::span<const TokenSeq> refs,
                                      bool allow_shifts, unsigned threads = 1) {
  check_same_length(hyps.size(), refs.size());
  if (hyps.empty()) throw DataError("distribution report needs at least one pair");
  std::vector<double> rates(hyps.size());
  parallel_for(hyps.size(), threads, [&](std::size_t i) {
    rates[i] = edit_rate(hyps[i], refs[i], allow_shifts).rate;
  });
  return {std::move(label), EditRateDist::from_samples(std::move(rates))};
}

// mt vs pe of a triplet corpus.
inline DistSeries distribution_series(std::string label,
                                      std::span<const Triplet> corpus,
                                      bool allow_shifts, unsigned threads = 1) {
  std::vector<TokenSeq> hyps, refs;
  hyps.reserve(corpus.size());
  refs.reserve(corpus.size());
  for (const auto& t : corpus) {
    hyps.push_back(t.mt);
    refs.push_back(t.pe);
  }
  return distribution_series(std::move(label), hyps, refs, allow_shifts, threads);
}

// Columns: series,bin_low,bin_high,count,fraction. The last bin is
// open-ended (bin_high = inf).
inline void write_histogram_csv(std::ostream& out,
                                std::span<const DistSeries> series) {
  out << "series,bin_low,bin_high,count,fraction\n";
  for (const auto& s : series) {
    const auto& h = s.dist.histogram();
    for (std::size_t b = 0; b < kHistogramBins; ++b) {
      std::ostringstream line;
      line << std::fixed << std::setprecision(2);
      line << s.label << ',' << b * kHistogramBinWidth << ',';
      if (b + 1 == kHistogramBins) {
        line << "inf";
      } else {
        line << (b + 1) * kHistogramBinWidth;
      }
      line << ',' << h[b] << ',' << std::setprecision(6)
           << static_cast<double>(h[b]) / static_cast<double>(s.dist.size());
      out << line.str() << '\n';
    }
  }
}

inline nlohmann::ordered_json distribution_json(std::span<const DistSeries> series) {
  nlohmann::ordered_json j;
  j["bin_width"] = kHistogramBinWidth;
  j["series"] = nlohmann::ordered_json::array();
  for (const auto& s : series) {
    nlohmann::ordered_json e;
    e["label"] = s.label;
    e["count"] = s.dist.size();
    e["mean"] = s.dist.mean();
    e["stddev"] = s.dist.stddev();
    e["histogram"] = s.dist.histogram();
    j["series"].push_back(std::move(e));
  }
  return j;
}

// Two-decimal percentage, as used in text reports.
inline std::string format_percent(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << v;
  return s.str();
}

}  // namespace apesynth
