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

// Corpus interleaving. Two synthetic corpora built from the same bitexts are
// merged record by record: the translation mt is kept when its edit rate
// against the reference lies within lambda standard deviations of the gold
// mean rate, otherwise the noised reference is used.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "apesynth/corpus.hpp"
#include "apesynth/edit_align.hpp"
#include "apesynth/error.hpp"
#include "apesynth/parallel.hpp"
#include "json.hpp"

namespace apesynth {

// lambda in {0} u [1, 3] u {inf}. 0 always picks the noised corpus and inf
// always picks the translation corpus.
class Lambda {
 public:
  static Lambda zero() { return Lambda(0.0, false); }
  static Lambda infinite() { return Lambda(0.0, true); }
  static Lambda finite(double v) {
    if (!(v == 0.0 || (v >= 1.0 && v <= 3.0))) {
      throw UsageError("lambda must be 0, inf, or in [1, 3]; got " +
                       std::to_string(v));
    }
    return Lambda(v, false);
  }

  static Lambda parse(const std::string& text) {
    if (text == "inf" || text == "infinity" || text == "\xE2\x88\x9E") {
      return infinite();
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(text, &used);
    } catch (const std::exception&) {
      throw UsageError("lambda is not a number: '" + text + "'");
    }
    if (used != text.size() || !std::isfinite(v)) {
      throw UsageError("lambda is not a number: '" + text + "'");
    }
    return finite(v);
  }

  bool is_infinite() const noexcept { return infinite_; }
  bool is_zero() const noexcept { return !infinite_ && value_ == 0.0; }
  double value() const noexcept {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }
  std::string str() const {
    if (infinite_) return "inf";
    nlohmann::json j = value_;
    return j.dump();
  }

 private:
  Lambda(double v, bool inf) : value_(v), infinite_(inf) {}
  double value_;
  bool infinite_;
};

struct InterleaveConfig {
  Lambda lambda = Lambda::finite(2.0);
  double mu_gold = 0.0;
  double sigma_gold = 0.0;
  bool allow_shifts = false;
};

struct InterleaveReport {
  std::uint64_t total = 0;
  std::uint64_t kept_trans = 0;
  std::uint64_t kept_noise = 0;

  double trans_ratio() const noexcept {
    return total ? static_cast<double>(kept_trans) / static_cast<double>(total) : 0.0;
  }
  double noise_ratio() const noexcept {
    return total ? static_cast<double>(kept_noise) / static_cast<double>(total) : 0.0;
  }

  InterleaveReport& operator+=(const InterleaveReport& o) noexcept {
    total += o.total;
    kept_trans += o.kept_trans;
    kept_noise += o.kept_noise;
    return *this;
  }
};

// The selection rule for one record, given the translation's edit rate.
inline bool keep_translation(double trans_rate, const InterleaveConfig& cfg) {
  if (cfg.lambda.is_infinite()) return true;
  if (cfg.lambda.is_zero()) return false;
  return std::abs(trans_rate - cfg.mu_gold) <= cfg.lambda.value() * cfg.sigma_gold;
}

inline void check_paired(const Triplet& trans, const Triplet& noise) {
  if (trans.id != noise.id) {
    throw DataError("record id mismatch: translation corpus has " +
                    std::to_string(trans.id) + ", noised corpus has " +
                    std::to_string(noise.id));
  }
  if (trans.src != noise.src) {
    throw DataError("record " + std::to_string(trans.id) +
                    ": src differs between the two corpora");
  }
  if (trans.pe != noise.pe) {
    throw DataError("record " + std::to_string(trans.id) +
                    ": reference differs between the two corpora");
  }
}

// Interleaves two id-aligned chunks. Output order follows the input.
inline std::pair<std::vector<Triplet>, InterleaveReport> interleave(
    std::span<const Triplet> trans, std::span<const Triplet> noise,
    const InterleaveConfig& cfg, unsigned threads = 1) {
  if (cfg.sigma_gold < 0.0) throw DataError("sigma_gold must be non-negative");
  if (trans.size() != noise.size()) {
    throw DataError("corpora differ in length: " + std::to_string(trans.size()) +
                    " vs " + std::to_string(noise.size()));
  }
  for (std::size_t i = 0; i < trans.size(); ++i) check_paired(trans[i], noise[i]);

  std::vector<char> pick_trans(trans.size());
  parallel_for(trans.size(), threads, [&](std::size_t i) {
    if (cfg.lambda.is_infinite() || cfg.lambda.is_zero()) {
      pick_trans[i] = cfg.lambda.is_infinite();
      return;
    }
    const double rate = edit_rate(trans[i].mt, trans[i].pe, cfg.allow_shifts).rate;
    pick_trans[i] = keep_translation(rate, cfg);
  });

  std::pair<std::vector<Triplet>, InterleaveReport> out;
  out.first.reserve(trans.size());
  for (std::size_t i = 0; i < trans.size(); ++i) {
    out.first.push_back(pick_trans[i] ? trans[i] : noise[i]);
    ++out.second.total;
    (pick_trans[i] ? out.second.kept_trans : out.second.kept_noise)++;
  }
  return out;
}

inline nlohmann::ordered_json to_json(const InterleaveReport& r,
                                      const InterleaveConfig& cfg) {
  nlohmann::ordered_json j;
  j["lambda"] = cfg.lambda.str();
  j["mu_gold"] = cfg.mu_gold;
  j["sigma_gold"] = cfg.sigma_gold;
  j["allow_shifts"] = cfg.allow_shifts;
  j["total"] = r.total;
  j["kept_trans"] = r.kept_trans;
  j["kept_noise"] = r.kept_noise;
  j["trans_ratio"] = r.trans_ratio();
  j["noise_ratio"] = r.noise_ratio();
  return j;
}

}  // namespace apesynth
