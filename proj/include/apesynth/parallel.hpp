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

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <span>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "apesynth/error.hpp"

namespace apesynth {

inline unsigned default_threads() {
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Work is claimed
// dynamically; callers must not depend on execution order. The first
// exception (lowest index) is rethrown after all workers join.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (n == 0) return;
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> cursor{0};
  std::vector<std::exception_ptr> errors(n);
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = cursor.fetch_add(1); i < n;
             i = cursor.fetch_add(1)) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
            failed = true;
          }
        }
      });
    }
  }
  if (failed) {
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
}

// Order-preserving map.
template <typename In, typename Fn>
auto parallel_map(std::span<const In> items, unsigned threads, Fn&& fn) {
  using Out = std::decay_t<std::invoke_result_t<Fn&, const In&>>;
  std::vector<Out> out(items.size());
  parallel_for(items.size(), threads,
               [&](std::size_t i) { out[i] = fn(items[i]); });
  return out;
}

// Order-preserving map that keeps going past per-record failures and then
// reports all of them (up to a limit) in one DataError tagged with the
// records' `id` fields.
template <typename In, typename Fn>
auto parallel_map_collect(std::span<const In> items, unsigned threads,
                          Fn&& fn) {
  using Out = std::decay_t<std::invoke_result_t<Fn&, const In&>>;
  std::vector<Out> out(items.size());
  std::vector<std::string> errors(items.size());
  parallel_for(items.size(), threads, [&](std::size_t i) {
    try {
      out[i] = fn(items[i]);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  std::string message;
  std::size_t count = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (errors[i].empty()) continue;
    if (++count <= 10) {
      message += "\n  record " + std::to_string(items[i].id) + ": " +
                 errors[i];
    }
  }
  if (count > 0) {
    if (count > 10) {
      message += "\n  ... and " + std::to_string(count - 10) + " more";
    }
    throw DataError(std::to_string(count) + " record(s) failed:" + message);
  }
  return out;
}

}  // namespace apesynth
