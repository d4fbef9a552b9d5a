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

// Error statistics of a gold post-editing corpus: the empirical distribution
// of per-sentence mt-pe edit rates, and the categorical distribution of edit
// operation types.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "apesynth/corpus.hpp"
#include "apesynth/edit_align.hpp"
#include "apesynth/error.hpp"
#include "apesynth/parallel.hpp"
#include "apesynth/rng.hpp"
#include "json.hpp"

namespace apesynth {

inline constexpr double kHistogramBinWidth = 0.05;
inline constexpr std::size_t kHistogramBins = 40;  // [0, 2), last bin open

// Rates are ratios of small integers, so x / 0.05 can land a hair under an
// integer boundary; the epsilon puts exact boundaries in the upper bin.
inline std::size_t histogram_bin(double rate) noexcept {
  if (!(rate > 0.0)) return 0;
  const auto b = static_cast<std::size_t>(std::floor(rate * 20.0 + 1e-9));
  return std::min(b, kHistogramBins - 1);
}

using Histogram = std::array<std::uint64_t, kHistogramBins>;

// Empirical multiset of edit rates with population mean / stddev.
class EditRateDist {
 public:
  EditRateDist() = default;

  static EditRateDist from_samples(std::vector<double> samples) {
    if (samples.empty()) {
      throw DataError("edit-rate distribution needs at least one sample");
    }
    EditRateDist d;
    d.samples_ = std::move(samples);
    double sum = 0.0;
    for (double x : d.samples_) {
      if (!(x >= 0.0) || !std::isfinite(x)) {
        throw DataError("edit rates must be finite and non-negative");
      }
      sum += x;
      ++d.histogram_[histogram_bin(x)];
    }
    const double n = static_cast<double>(d.samples_.size());
    d.mean_ = sum / n;
    double sq = 0.0;
    for (double x : d.samples_) sq += (x - d.mean_) * (x - d.mean_);
    d.stddev_ = std::sqrt(sq / n);
    return d;
  }

  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  const std::vector<double>& samples() const noexcept { return samples_; }
  double mean() const noexcept { return mean_; }
  double stddev() const noexcept { return stddev_; }
  const Histogram& histogram() const noexcept { return histogram_; }

 private:
  std::vector<double> samples_;
  double mean_ = 0.0;
  double stddev_ = 0.0;
  Histogram histogram_{};
};

// Uniform draw from the stored multiset.
inline double sample_edit_rate(const EditRateDist& dist, Rng& rng) {
  if (dist.empty()) throw DataError("cannot sample from an empty distribution");
  return dist.samples()[rng.uniform_index(dist.size())];
}

// Probabilities of keep / substitution / insertion / deletion.
struct ErrorTypeDist {
  double keep = 1.0;
  double sub = 0.0;
  double ins = 0.0;
  double del = 0.0;

  double sum() const noexcept { return keep + sub + ins + del; }

  void validate() const {
    for (double p : {keep, sub, ins, del}) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw DataError("error-type probabilities must lie in [0, 1]");
      }
    }
    if (std::abs(sum() - 1.0) > 1e-9) {
      throw DataError("error-type probabilities must sum to 1");
    }
  }

  // Normalized over all ops plus shifts; each shift counts as a substitution.
  static ErrorTypeDist from_counts(const OpCounts& ops, std::size_t shifts) {
    const double total = static_cast<double>(ops.total() + shifts);
    if (total == 0.0) throw DataError("no alignment operations to normalize");
    ErrorTypeDist mu;
    mu.keep = static_cast<double>(ops.match) / total;
    mu.sub = static_cast<double>(ops.sub + shifts) / total;
    mu.ins = static_cast<double>(ops.ins) / total;
    mu.del = static_cast<double>(ops.del) / total;
    return mu;
  }
};

struct GoldStats {
  EditRateDist rates;
  ErrorTypeDist mu;
  OpCounts ops;
  std::size_t shifts = 0;
  bool allow_shifts = false;
  std::string corpus_digest;
};

// Streaming collector. Chunks may be aligned in parallel; the reduction runs
// in record order, so the result does not depend on the worker count.
class GoldStatsCollector {
 public:
  explicit GoldStatsCollector(bool allow_shifts) : allow_shifts_(allow_shifts) {}

  void add(std::span<const Triplet> chunk, unsigned threads = 1) {
    struct PerRecord {
      double rate = 0.0;
      OpCounts ops;
      std::size_t shifts = 0;
    };
    const bool shifts = allow_shifts_;
    auto results = parallel_map_collect(chunk, threads, [shifts](const Triplet& t) {
      const auto a = ter_align(t.mt, t.pe, shifts);
      PerRecord r;
      r.rate = static_cast<double>(a.distance) / static_cast<double>(t.pe.size());
      r.ops = a.counts();
      r.shifts = a.shift_count;
      return r;
    });
    for (const auto& r : results) {
      rates_.push_back(r.rate);
      ops_ += r.ops;
      shifts_ += r.shifts;
    }
  }

  std::size_t size() const noexcept { return rates_.size(); }

  GoldStats finish() && {
    if (rates_.empty()) throw DataError("gold corpus is empty");
    GoldStats s;
    s.rates = EditRateDist::from_samples(std::move(rates_));
    s.mu = ErrorTypeDist::from_counts(ops_, shifts_);
    s.ops = ops_;
    s.shifts = shifts_;
    s.allow_shifts = allow_shifts_;
    return s;
  }

 private:
  bool allow_shifts_;
  std::vector<double> rates_;
  OpCounts ops_;
  std::size_t shifts_ = 0;
};

inline GoldStats collect_gold_stats(std::span<const Triplet> gold,
                                    bool allow_shifts, unsigned threads = 1) {
  GoldStatsCollector c(allow_shifts);
  c.add(gold, threads);
  return std::move(c).finish();
}

inline EditRateDist collect_edit_rate_dist(std::span<const Triplet> gold,
                                           bool allow_shifts,
                                           unsigned threads = 1) {
  return collect_gold_stats(gold, allow_shifts, threads).rates;
}

inline ErrorTypeDist collect_error_type_dist(std::span<const Triplet> gold,
                                             bool allow_shifts,
                                             unsigned threads = 1) {
  return collect_gold_stats(gold, allow_shifts, threads).mu;
}

// ---------------------------------------------------------------------------
// Stats file (JSON)

inline constexpr std::string_view kStatsFormat = "apesynth-stats";
inline constexpr int kStatsVersion = 1;

inline nlohmann::ordered_json histogram_json(const Histogram& h) {
  nlohmann::ordered_json j;
  j["bin_width"] = kHistogramBinWidth;
  j["counts"] = h;
  return j;
}

inline nlohmann::ordered_json to_json(const GoldStats& s) {
  nlohmann::ordered_json j;
  j["format"] = kStatsFormat;
  j["version"] = kStatsVersion;
  j["allow_shifts"] = s.allow_shifts;
  j["corpus_digest"] = s.corpus_digest;
  j["records"] = s.rates.size();
  j["edit_rate"]["mean"] = s.rates.mean();
  j["edit_rate"]["stddev"] = s.rates.stddev();
  j["edit_rate"]["histogram"] = histogram_json(s.rates.histogram());
  j["edit_rate"]["samples"] = s.rates.samples();
  j["error_types"]["keep"] = s.mu.keep;
  j["error_types"]["sub"] = s.mu.sub;
  j["error_types"]["ins"] = s.mu.ins;
  j["error_types"]["del"] = s.mu.del;
  j["op_counts"]["match"] = s.ops.match;
  j["op_counts"]["sub"] = s.ops.sub;
  j["op_counts"]["ins"] = s.ops.ins;
  j["op_counts"]["del"] = s.ops.del;
  j["op_counts"]["shift"] = s.shifts;
  return j;
}

inline bool close_relative(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({1e-12, std::abs(a), std::abs(b)});
}

inline GoldStats stats_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kStatsFormat ||
        j.at("version").get<int>() != kStatsVersion) {
      throw DataError("not an apesynth stats file (format/version mismatch)");
    }
    GoldStats s;
    s.allow_shifts = j.at("allow_shifts").get<bool>();
    s.corpus_digest = j.at("corpus_digest").get<std::string>();
    const auto& er = j.at("edit_rate");
    s.rates = EditRateDist::from_samples(
        er.at("samples").get<std::vector<double>>());
    if (!close_relative(s.rates.mean(), er.at("mean").get<double>(), 1e-9) ||
        !close_relative(s.rates.stddev(), er.at("stddev").get<double>(), 1e-9)) {
      throw DataError("stats summary is inconsistent with its samples");
    }
    const auto& mu = j.at("error_types");
    s.mu = {mu.at("keep").get<double>(), mu.at("sub").get<double>(),
            mu.at("ins").get<double>(), mu.at("del").get<double>()};
    s.mu.validate();
    const auto& oc = j.at("op_counts");
    s.ops = {oc.at("match").get<std::size_t>(), oc.at("sub").get<std::size_t>(),
             oc.at("ins").get<std::size_t>(), oc.at("del").get<std::size_t>()};
    s.shifts = oc.at("shift").get<std::size_t>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed stats file: ") + e.what());
  }
}

inline void save_stats(const GoldStats& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write stats file '" + path + "'");
  out << to_json(s).dump(2) << '\n';
  if (!out) throw DataError("write failed on '" + path + "'");
}

inline GoldStats load_stats(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw UsageError("stats file not found: '" + path +
                     "' (produce it with `apesynth stats`)");
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed stats file '" + path + "': " + e.what());
  }
  return stats_from_json(j);
}

}  // namespace apesynth
