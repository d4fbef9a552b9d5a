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

// Record types shared by every stage, and streaming TSV / JSONL corpus I/O.
//
// TSV layouts (UTF-8, LF):
//   bitext   src TAB ref
//   triplet  src TAB mt TAB pe
// Each field is a whitespace-tokenized sentence; record ids are 0-based line
// ordinals. JSONL records carry token arrays under "src", "ref", "mt", "pe",
// "y_mask", "y_noise" and an optional "id" (line ordinal when absent).

#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "apesynth/error.hpp"
#include "json.hpp"

namespace apesynth {

inline constexpr std::string_view kMaskToken = "<MASK>";

inline bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

class TokenSeq {
 public:
  using value_type = std::string;
  using const_iterator = std::vector<std::string>::const_iterator;

  TokenSeq() = default;
  TokenSeq(std::initializer_list<std::string> tokens) : tokens_(tokens) {}
  explicit TokenSeq(std::vector<std::string> tokens)
      : tokens_(std::move(tokens)) {}

  // Whitespace tokenization; never yields empty tokens.
  static TokenSeq split(std::string_view text) {
    TokenSeq seq;
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && is_space(text[i])) ++i;
      std::size_t j = i;
      while (j < text.size() && !is_space(text[j])) ++j;
      if (j > i) seq.tokens_.emplace_back(text.substr(i, j - i));
      i = j;
    }
    return seq;
  }

  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  const std::string& operator[](std::size_t i) const { return tokens_[i]; }
  const_iterator begin() const noexcept { return tokens_.begin(); }
  const_iterator end() const noexcept { return tokens_.end(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  void push_back(std::string token) { tokens_.push_back(std::move(token)); }
  void reserve(std::size_t n) { tokens_.reserve(n); }

  std::size_t count(std::string_view token) const {
    return static_cast<std::size_t>(
        std::count(tokens_.begin(), tokens_.end(), token));
  }
  std::size_t mask_count() const { return count(kMaskToken); }
  bool contains_mask() const { return mask_count() > 0; }

  std::string join(char sep = ' ') const {
    std::string out;
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (i) out.push_back(sep);
      out += tokens_[i];
    }
    return out;
  }

  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;

 private:
  std::vector<std::string> tokens_;
};

struct Bitext {
  std::uint64_t id = 0;
  TokenSeq src;
  TokenSeq ref;

  friend bool operator==(const Bitext&, const Bitext&) = default;
};

struct Triplet {
  std::uint64_t id = 0;
  TokenSeq src;
  TokenSeq mt;
  TokenSeq pe;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

// Training example for a filler: the reference with error sites masked, and
// the same sequence with the masks replaced by the erroneous MT tokens.
struct MlmTrainRecord {
  std::uint64_t id = 0;
  TokenSeq src;
  TokenSeq y_mask;
  TokenSeq y_noise;

  friend bool operator==(const MlmTrainRecord&, const MlmTrainRecord&) =
      default;
};

// Masked reference awaiting a filler. `ref` rides along so the filled
// result can be emitted as a triplet <src, filled, ref>.
struct MaskedRecord {
  std::uint64_t id = 0;
  TokenSeq src;
  TokenSeq ref;
  TokenSeq y_mask;

  // Every reference token drew a deletion.
  bool degenerate() const noexcept { return y_mask.empty(); }

  friend bool operator==(const MaskedRecord&, const MaskedRecord&) = default;
};

enum class MaskPolicy { kForbid, kAllow };

// Rejects empty tokens, and `<MASK>` unless the field is a masked sequence.
inline void check_tokens(const TokenSeq& seq, MaskPolicy policy,
                         std::string_view field, std::uint64_t line = 0) {
  for (const auto& token : seq) {
    if (token.empty()) {
      throw DataError("empty token in field '" + std::string(field) + "'",
                      line);
    }
    if (policy == MaskPolicy::kForbid && token == kMaskToken) {
      throw DataError("reserved token <MASK> in unmasked field '" +
                          std::string(field) + "'",
                      line);
    }
  }
}

inline void check_nonempty(const TokenSeq& seq, std::string_view field,
                           std::uint64_t line = 0) {
  if (seq.empty()) {
    throw DataError("empty field '" + std::string(field) + "'", line);
  }
}

inline void validate(const Bitext& r, std::uint64_t line = 0) {
  check_nonempty(r.src, "src", line);
  check_nonempty(r.ref, "ref", line);
  check_tokens(r.src, MaskPolicy::kForbid, "src", line);
  check_tokens(r.ref, MaskPolicy::kForbid, "ref", line);
}

inline void validate(const Triplet& r, std::uint64_t line = 0) {
  check_nonempty(r.src, "src", line);
  check_nonempty(r.mt, "mt", line);
  check_nonempty(r.pe, "pe", line);
  check_tokens(r.src, MaskPolicy::kForbid, "src", line);
  check_tokens(r.mt, MaskPolicy::kForbid, "mt", line);
  check_tokens(r.pe, MaskPolicy::kForbid, "pe", line);
}

inline void validate(const MlmTrainRecord& r, std::uint64_t line = 0) {
  check_nonempty(r.src, "src", line);
  check_nonempty(r.y_mask, "y_mask", line);
  check_tokens(r.src, MaskPolicy::kForbid, "src", line);
  check_tokens(r.y_mask, MaskPolicy::kAllow, "y_mask", line);
  check_tokens(r.y_noise, MaskPolicy::kForbid, "y_noise", line);
  if (r.y_mask.size() != r.y_noise.size()) {
    throw DataError("y_mask and y_noise differ in length", line);
  }
  for (std::size_t i = 0; i < r.y_mask.size(); ++i) {
    if (r.y_mask[i] != kMaskToken && r.y_mask[i] != r.y_noise[i]) {
      throw DataError("y_noise differs from y_mask at unmasked position " +
                          std::to_string(i),
                      line);
    }
  }
}

inline void validate(const MaskedRecord& r, std::uint64_t line = 0) {
  check_nonempty(r.src, "src", line);
  check_nonempty(r.ref, "ref", line);
  check_tokens(r.src, MaskPolicy::kForbid, "src", line);
  check_tokens(r.ref, MaskPolicy::kForbid, "ref", line);
  check_tokens(r.y_mask, MaskPolicy::kAllow, "y_mask", line);
}

enum class Format { kTsv, kJsonl };

inline std::string_view to_string(Format f) noexcept {
  return f == Format::kTsv ? "tsv" : "jsonl";
}

inline Format parse_format(std::string_view name) {
  if (name == "tsv") return Format::kTsv;
  if (name == "jsonl") return Format::kJsonl;
  throw UsageError("unknown corpus format '" + std::string(name) +
                   "' (expected tsv or jsonl)");
}

// ".jsonl" / ".json" select JSONL; everything else is TSV.
inline Format format_from_path(std::string_view path) {
  auto ends_with = [&](std::string_view suffix) {
    return path.size() >= suffix.size() &&
           path.substr(path.size() - suffix.size()) == suffix;
  };
  return ends_with(".jsonl") || ends_with(".json") ? Format::kJsonl
                                                   : Format::kTsv;
}

namespace detail {

using ordered_json = nlohmann::ordered_json;

inline TokenSeq tokens_from_json(const nlohmann::json& obj,
                                 std::string_view key, std::uint64_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw DataError("missing field '" + std::string(key) + "'", line);
  }
  if (!it->is_array()) {
    throw DataError("field '" + std::string(key) + "' is not an array", line);
  }
  std::vector<std::string> tokens;
  tokens.reserve(it->size());
  for (const auto& t : *it) {
    if (!t.is_string()) {
      throw DataError("non-string token in field '" + std::string(key) + "'",
                      line);
    }
    tokens.push_back(t.get<std::string>());
  }
  return TokenSeq(std::move(tokens));
}

inline ordered_json tokens_to_json(const TokenSeq& seq) {
  return ordered_json(seq.tokens());
}

inline void append_tsv_field(std::string& out, const TokenSeq& seq,
                             std::string_view field) {
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto& token = seq[i];
    if (std::any_of(token.begin(), token.end(), is_space)) {
      throw DataError("token with embedded whitespace in field '" +
                      std::string(field) + "' cannot be written as TSV");
    }
    if (i) out.push_back(' ');
    out += token;
  }
}

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

}  // namespace detail

// Per-record serialization. Specialized for every record type.
template <typename Record>
struct RecordTraits;

template <>
struct RecordTraits<Bitext> {
  static constexpr std::string_view kName = "bitext";
  static constexpr std::size_t kTsvArity = 2;

  static Bitext from_fields(std::vector<std::string_view> fields,
                            std::uint64_t id) {
    return {id, TokenSeq::split(fields[0]), TokenSeq::split(fields[1])};
  }
  static std::vector<std::pair<std::string_view, const TokenSeq*>> fields(
      const Bitext& r) {
    return {{"src", &r.src}, {"ref", &r.ref}};
  }
  static Bitext from_json(const nlohmann::json& j, std::uint64_t id,
                          std::uint64_t line) {
    return {id, detail::tokens_from_json(j, "src", line),
            detail::tokens_from_json(j, "ref", line)};
  }
};

template <>
struct RecordTraits<Triplet> {
  static constexpr std::string_view kName = "triplet";
  static constexpr std::size_t kTsvArity = 3;

  static Triplet from_fields(std::vector<std::string_view> fields,
                             std::uint64_t id) {
    return {id, TokenSeq::split(fields[0]), TokenSeq::split(fields[1]),
            TokenSeq::split(fields[2])};
  }
  static std::vector<std::pair<std::string_view, const TokenSeq*>> fields(
      const Triplet& r) {
    return {{"src", &r.src}, {"mt", &r.mt}, {"pe", &r.pe}};
  }
  static Triplet from_json(const nlohmann::json& j, std::uint64_t id,
                           std::uint64_t line) {
    return {id, detail::tokens_from_json(j, "src", line),
            detail::tokens_from_json(j, "mt", line),
            detail::tokens_from_json(j, "pe", line)};
  }
};

template <>
struct RecordTraits<MlmTrainRecord> {
  static constexpr std::string_view kName = "mlm";
  static constexpr std::size_t kTsvArity = 3;

  static MlmTrainRecord from_fields(std::vector<std::string_view> fields,
                                    std::uint64_t id) {
    return {id, TokenSeq::split(fields[0]), TokenSeq::split(fields[1]),
            TokenSeq::split(fields[2])};
  }
  static std::vector<std::pair<std::string_view, const TokenSeq*>> fields(
      const MlmTrainRecord& r) {
    return {{"src", &r.src}, {"y_mask", &r.y_mask}, {"y_noise", &r.y_noise}};
  }
  static MlmTrainRecord from_json(const nlohmann::json& j, std::uint64_t id,
                                  std::uint64_t line) {
    return {id, detail::tokens_from_json(j, "src", line),
            detail::tokens_from_json(j, "y_mask", line),
            detail::tokens_from_json(j, "y_noise", line)};
  }
};

template <>
struct RecordTraits<MaskedRecord> {
  static constexpr std::string_view kName = "masked";
  // y_mask may be empty, which a tab-separated line cannot tell apart from
  // a missing field, so masked corpora are JSONL only.
  static constexpr std::size_t kTsvArity = 0;

  static MaskedRecord from_fields(std::vector<std::string_view>,
                                  std::uint64_t) {
    throw UsageError("masked corpora are JSONL only");
  }
  static std::vector<std::pair<std::string_view, const TokenSeq*>> fields(
      const MaskedRecord& r) {
    return {{"src", &r.src}, {"ref", &r.ref}, {"y_mask", &r.y_mask}};
  }
  static MaskedRecord from_json(const nlohmann::json& j, std::uint64_t id,
                                std::uint64_t line) {
    return {id, detail::tokens_from_json(j, "src", line),
            detail::tokens_from_json(j, "ref", line),
            detail::tokens_from_json(j, "y_mask", line)};
  }
};

// Lazy reader: one record per line, in file order.
template <typename Record>
class CorpusReader {
 public:
  using Traits = RecordTraits<Record>;

  CorpusReader(const std::string& path, Format format)
      : path_(path), format_(format), in_(path, std::ios::binary) {
    if (!in_) throw DataError("cannot open corpus file '" + path + "'");
    if (format_ == Format::kTsv && Traits::kTsvArity == 0) {
      throw UsageError(std::string(Traits::kName) +
                       " corpora must be JSONL: '" + path + "'");
    }
  }

  std::optional<Record> next() {
    std::string text;
    if (!std::getline(in_, text)) return std::nullopt;
    const std::uint64_t line = ++line_;
    const std::uint64_t ordinal = line - 1;
    Record record = format_ == Format::kTsv ? parse_tsv(text, ordinal, line)
                                            : parse_jsonl(text, ordinal, line);
    validate(record, line);
    return record;
  }

  // Up to `n` records; fewer only at end of stream.
  std::vector<Record> next_chunk(std::size_t n) {
    std::vector<Record> chunk;
    chunk.reserve(std::min<std::size_t>(n, 4096));
    while (chunk.size() < n) {
      auto r = next();
      if (!r) break;
      chunk.push_back(std::move(*r));
    }
    return chunk;
  }

  std::vector<Record> read_all() {
    std::vector<Record> all;
    while (auto r = next()) all.push_back(std::move(*r));
    return all;
  }

  std::uint64_t lines_read() const noexcept { return line_; }
  const std::string& path() const noexcept { return path_; }

 private:
  Record parse_tsv(std::string_view text, std::uint64_t id,
                   std::uint64_t line) const {
    auto fields = detail::split_tabs(text);
    if (fields.size() != Traits::kTsvArity) {
      throw DataError("expected " + std::to_string(Traits::kTsvArity) +
                          " tab-separated fields for a " +
                          std::string(Traits::kName) + ", found " +
                          std::to_string(fields.size()),
                      line);
    }
    return Traits::from_fields(std::move(fields), id);
  }

  Record parse_jsonl(std::string_view text, std::uint64_t id,
                     std::uint64_t line) const {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(std::string("malformed JSON: ") + e.what(), line);
    }
    if (!j.is_object()) throw DataError("JSONL record is not an object", line);
    if (auto it = j.find("id"); it != j.end()) {
      if (!it->is_number_unsigned()) {
        throw DataError("field 'id' is not a non-negative integer", line);
      }
      id = it->get<std::uint64_t>();
    }
    return Traits::from_json(j, id, line);
  }

  std::string path_;
  Format format_;
  std::ifstream in_;
  std::uint64_t line_ = 0;
};

template <typename Record>
std::vector<Record> read_corpus(const std::string& path, Format format) {
  return CorpusReader<Record>(path, format).read_all();
}

template <typename Record>
class CorpusWriter {
 public:
  using Traits = RecordTraits<Record>;

  CorpusWriter(const std::string& path, Format format)
      : path_(path), format_(format), out_(path, std::ios::binary) {
    if (!out_) throw DataError("cannot write corpus file '" + path + "'");
    if (format_ == Format::kTsv && Traits::kTsvArity == 0) {
      throw UsageError(std::string(Traits::kName) +
                       " corpora must be JSONL: '" + path + "'");
    }
  }

  void write(const Record& record) {
    out_ << serialize(record, format_) << '\n';
    if (!out_) throw DataError("write failed on '" + path_ + "'");
  }

  template <typename Range>
  void write_all(const Range& records) {
    for (const auto& r : records) write(r);
  }

  void close() {
    out_.close();
    if (!out_) throw DataError("closing '" + path_ + "' failed");
  }

  // Single line without the trailing newline.
  static std::string serialize(const Record& record, Format format) {
    if (format == Format::kTsv) {
      std::string line;
      bool first = true;
      for (const auto& [name, seq] : Traits::fields(record)) {
        if (!first) line.push_back('\t');
        first = false;
        detail::append_tsv_field(line, *seq, name);
      }
      return line;
    }
    detail::ordered_json j;
    j["id"] = record.id;
    for (const auto& [name, seq] : Traits::fields(record)) {
      j[std::string(name)] = detail::tokens_to_json(*seq);
    }
    return j.dump();
  }

 private:
  std::string path_;
  Format format_;
  std::ofstream out_;
};

template <typename Record, typename Range>
void write_corpus(const Range& records, const std::string& path,
                  Format format) {
  CorpusWriter<Record> writer(path, format);
  writer.write_all(records);
  writer.close();
}

// One whitespace-tokenized segment per line; used for plain hypothesis and
// reference files. Empty lines yield empty sequences.
inline std::vector<TokenSeq> read_segments(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open segment file '" + path + "'");
  std::vector<TokenSeq> out;
  std::string text;
  while (std::getline(in, text)) out.push_back(TokenSeq::split(text));
  return out;
}

}  // namespace apesynth
