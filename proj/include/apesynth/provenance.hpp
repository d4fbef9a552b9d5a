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

// Provenance sidecars. Every artifact `X` written by the command-line tool
// gets `X.prov.json` recording the tool version, the canonical command line,
// the seed, and SHA-256 digests of all inputs and of `X` itself. The
// worker count is not part of the record, since it never changes outputs.

#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "apesynth/error.hpp"
#include "json.hpp"

namespace apesynth {

inline constexpr std::string_view kToolVersion = "0.1.0";

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw Error("SHA-256 initialisation failed");
    }
  }

  void update(std::string_view bytes) {
    EVP_DigestUpdate(ctx_.get(), bytes.data(), bytes.size());
  }

  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md.data(), &len);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
      out.push_back(kHex[md[i] >> 4]);
      out.push_back(kHex[md[i] & 0xF]);
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

inline std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path + "' for digest");
  Sha256 h;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())));
  }
  return h.hex();
}

struct Provenance {
  std::string command;                                       // subcommand
  std::vector<std::pair<std::string, std::string>> options;  // canonical
  std::optional<std::uint64_t> seed;
  std::vector<std::string> inputs;

  std::string command_line() const {
    std::string line = "apesynth " + command;
    for (const auto& [k, v] : options) {
      line += " " + k;
      if (!v.empty()) line += " " + v;
    }
    return line;
  }
};

inline void write_provenance(const std::string& artifact, const Provenance& p) {
  nlohmann::ordered_json j;
  j["tool"] = "apesynth";
  j["version"] = kToolVersion;
  j["command"] = p.command;
  j["command_line"] = p.command_line();
  if (p.seed) {
    j["seed"] = *p.seed;
  } else {
    j["seed"] = nullptr;
  }
  j["inputs"] = nlohmann::ordered_json::array();
  for (const auto& in : p.inputs) {
    j["inputs"].push_back({{"path", in}, {"sha256", sha256_file(in)}});
  }
  j["output"] = {{"path", artifact}, {"sha256", sha256_file(artifact)}};
  const std::string path = artifact + ".prov.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write provenance file '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace apesynth
