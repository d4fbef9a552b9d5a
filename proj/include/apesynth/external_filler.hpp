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

// Client for external fillers speaking the "ape-fill" v1 line protocol over
// a child process's stdin/stdout (one JSON object per line, UTF-8):
//
//   child -> {"protocol": "ape-fill", "version": 1}          first line
//   parent -> {"id": 7, "src": [...], "masked": [..., "<MASK>", ...]}
//   child -> {"id": 7, "filled": [...]}    or {"id": 7, "error": "..."}
//   parent -> {"shutdown": true}                             end of stream
//
// Requests are pipelined: up to `max_inflight` batches of `batch_size`
// requests are outstanding at once. A batch that sees no completion within
// `timeout` fails every record still pending in it.

#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "apesynth/corpus.hpp"
#include "apesynth/error.hpp"
#include "apesynth/filler.hpp"
#include "json.hpp"

extern char** environ;

namespace apesynth {

struct ExternalFillerOptions {
  std::size_t batch_size = 64;
  std::size_t max_inflight = 4;
  std::chrono::milliseconds timeout{60'000};
};

// A `/bin/sh -c command` child with piped stdin and stdout. stderr is
// inherited.
class ChildProcess {
 public:
  explicit ChildProcess(const std::string& command) {
    int to_child[2], from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0) throw_errno("pipe");
    if (::pipe2(from_child, O_CLOEXEC) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw_errno("pipe");
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);
    const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};
    const int rc = ::posix_spawn(&pid_, "/bin/sh", &actions, nullptr,
                                 const_cast<char**>(argv), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(to_child[0]);
    ::close(from_child[1]);
    if (rc != 0) {
      ::close(to_child[1]);
      ::close(from_child[0]);
      throw ProtocolError("cannot start filler '" + command +
                          "': " + std::strerror(rc));
    }
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
    ::fcntl(in_fd_, F_SETFL, ::fcntl(in_fd_, F_GETFL) | O_NONBLOCK);
    ::fcntl(out_fd_, F_SETFL, ::fcntl(out_fd_, F_GETFL) | O_NONBLOCK);
  }

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  ~ChildProcess() {
    close_stdin();
    if (out_fd_ >= 0) ::close(out_fd_);
    if (pid_ > 0 && !wait_exit(std::chrono::milliseconds(2000))) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
  }

  int stdin_fd() const noexcept { return in_fd_; }
  int stdout_fd() const noexcept { return out_fd_; }

  void close_stdin() noexcept {
    if (in_fd_ >= 0) {
      ::close(in_fd_);
      in_fd_ = -1;
    }
  }

  void kill() noexcept {
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
      pid_ = -1;
    }
  }

  // True once the child has been reaped.
  bool wait_exit(std::chrono::milliseconds limit) noexcept {
    if (pid_ <= 0) return true;
    const auto deadline = std::chrono::steady_clock::now() + limit;
    while (true) {
      const pid_t r = ::waitpid(pid_, nullptr, WNOHANG);
      if (r == pid_ || (r < 0 && errno != EINTR)) {
        pid_ = -1;
        return true;
      }
      if (std::chrono::steady_clock::now() >= deadline) return false;
      ::usleep(5000);
    }
  }

 private:
  [[noreturn]] static void throw_errno(const char* what) {
    throw ProtocolError(std::string(what) + ": " + std::strerror(errno));
  }

  pid_t pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
};

class ExternalFiller : public Filler {
 public:
  using Clock = std::chrono::steady_clock;

  explicit ExternalFiller(const std::string& command,
                          ExternalFillerOptions options = {})
      : options_(options) {
    if (options_.batch_size == 0 || options_.max_inflight == 0) {
      throw UsageError("batch size and in-flight limit must be positive");
    }
    ::signal(SIGPIPE, SIG_IGN);
    child_.emplace(command);
    std::optional<std::string> line;
    try {
      line = pump(Clock::now() + options_.timeout);
    } catch (const ProtocolError& e) {
      throw ProtocolError(std::string("no handshake from filler: ") + e.what());
    }
    if (!line) {
      throw ProtocolError("no handshake from filler within " +
                          std::to_string(options_.timeout.count()) + " ms");
    }
    nlohmann::json hello;
    try {
      hello = nlohmann::json::parse(*line);
    } catch (const nlohmann::json::exception&) {
      throw ProtocolError("malformed handshake line: " + *line);
    }
    if (!hello.is_object() || hello.value("protocol", "") != "ape-fill" ||
        !hello.contains("version") || hello["version"] != 1) {
      throw ProtocolError("unexpected handshake: " + *line);
    }
  }

  ~ExternalFiller() override {
    try {
      shutdown();
    } catch (...) {
    }
  }

  bool is_external() const noexcept override { return true; }

  // Sends {"shutdown": true}, closes the pipe and reaps the child.
  void shutdown() {
    if (!child_) return;
    if (child_->stdin_fd() >= 0) {
      write_buffer_ = "{\"shutdown\":true}\n";
      flush_blocking(Clock::now() + std::chrono::milliseconds(2000));
      child_->close_stdin();
    }
    if (!child_->wait_exit(std::min<std::chrono::milliseconds>(
            options_.timeout, std::chrono::milliseconds(5000)))) {
      child_->kill();
    }
    child_.reset();
  }

  std::vector<FillOutcome> fill_batch(
      std::span<const MaskedRecord> records) override {
    if (!child_) throw ProtocolError("filler process is not running");
    std::vector<FillOutcome> out(records.size());
    std::unordered_map<std::uint64_t, std::size_t> by_id;
    for (std::size_t i = 0; i < records.size(); ++i) {
      out[i].id = records[i].id;
      if (!by_id.emplace(records[i].id, i).second) {
        throw DataError("duplicate record id " + std::to_string(records[i].id) +
                        " in filler input");
      }
    }

    struct Batch {
      std::size_t begin, end, pending;
      Clock::time_point deadline;
    };
    std::deque<Batch> inflight;
    std::vector<std::size_t> batch_of(records.size());
    std::vector<char> done(records.size(), 0);
    std::size_t next = 0, remaining = records.size();
    std::vector<Batch> batches;

    while (remaining > 0) {
      while (inflight.size() < options_.max_inflight && next < records.size()) {
        const std::size_t end = std::min(records.size(), next + options_.batch_size);
        for (std::size_t i = next; i < end; ++i) {
          write_buffer_ += request_line(records[i]);
          batch_of[i] = batches.size();
        }
        batches.push_back({next, end, end - next, Clock::now() + options_.timeout});
        inflight.push_back(batches.back());
        next = end;
      }

      const auto deadline = batches[batch_of[inflight.front().begin]].deadline;
      auto line = pump(deadline);
      if (!line) {
        // Timeout: fail everything unresolved and stop talking to the child.
        for (std::size_t i = 0; i < records.size(); ++i) {
          if (!done[i]) {
            out[i].error = "timed out after " +
                           std::to_string(options_.timeout.count()) +
                           " ms waiting for the filler";
          }
        }
        child_->kill();
        child_.reset();
        return out;
      }

      nlohmann::json resp;
      try {
        resp = nlohmann::json::parse(*line);
      } catch (const nlohmann::json::exception&) {
        throw ProtocolError("malformed response line: " + *line);
      }
      if (!resp.is_object() || !resp.contains("id") ||
          !resp["id"].is_number_unsigned()) {
        throw ProtocolError("response without a valid id: " + *line);
      }
      const auto id = resp["id"].get<std::uint64_t>();
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        throw ProtocolError("response for unknown id " + std::to_string(id));
      }
      const std::size_t i = it->second;
      if (done[i] || i >= next) {
        throw ProtocolError("unexpected or duplicate response for id " +
                            std::to_string(id));
      }
      done[i] = 1;
      --remaining;
      out[i] = parse_response(records[i], resp);

      Batch& b = batches[batch_of[i]];
      if (--b.pending == 0) {
        std::erase_if(inflight, [&](const Batch& x) { return x.begin == b.begin; });
      } else {
        b.deadline = Clock::now() + options_.timeout;
      }
    }
    return out;
  }

 private:
  static std::string request_line(const MaskedRecord& r) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["src"] = r.src.tokens();
    j["masked"] = r.y_mask.tokens();
    return j.dump() + "\n";
  }

  static FillOutcome parse_response(const MaskedRecord& r,
                                    const nlohmann::json& resp) {
    FillOutcome o;
    o.id = r.id;
    if (auto e = resp.find("error"); e != resp.end()) {
      o.error = "filler reported error: " +
                (e->is_string() ? e->get<std::string>() : e->dump());
      return o;
    }
    auto f = resp.find("filled");
    if (f == resp.end() || !f->is_array()) {
      o.error = "response has no 'filled' array";
      return o;
    }
    std::vector<std::string> tokens;
    for (const auto& t : *f) {
      if (!t.is_string()) {
        o.error = "non-string token in 'filled'";
        return o;
      }
      tokens.push_back(t.get<std::string>());
    }
    TokenSeq filled(std::move(tokens));
    if (auto bad = check_fill(r.y_mask, filled)) {
      o.error = *bad;
      return o;
    }
    o.filled = std::move(filled);
    return o;
  }

  // Writes pending requests and reads until one full line is available.
  // nullopt on deadline; ProtocolError if the child closes its output.
  std::optional<std::string> pump(Clock::time_point deadline) {
    while (true) {
      if (auto nl = read_buffer_.find('\n'); nl != std::string::npos) {
        std::string line = read_buffer_.substr(0, nl);
        read_buffer_.erase(0, nl + 1);
        return line;
      }
      const auto now = Clock::now();
      if (now >= deadline) return std::nullopt;
      const int wait_ms = static_cast<int>(
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now)
              .count() + 1);
      pollfd fds[2] = {{child_->stdout_fd(), POLLIN, 0},
                       {child_->stdin_fd(), POLLOUT, 0}};
      const nfds_t nfds = write_buffer_.empty() || child_->stdin_fd() < 0 ? 1 : 2;
      const int rc = ::poll(fds, nfds, wait_ms);
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError(std::string("poll: ") + std::strerror(errno));
      }
      if (nfds == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
        write_some();
      }
      if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
        char buf[65536];
        const ssize_t n = ::read(child_->stdout_fd(), buf, sizeof buf);
        if (n > 0) {
          read_buffer_.append(buf, static_cast<std::size_t>(n));
        } else if (n == 0) {
          throw ProtocolError("filler process closed its output");
        } else if (errno != EAGAIN && errno != EINTR) {
          throw ProtocolError(std::string("read: ") + std::strerror(errno));
        }
      }
    }
  }

  void write_some() {
    const ssize_t n =
        ::write(child_->stdin_fd(), write_buffer_.data(), write_buffer_.size());
    if (n > 0) {
      write_buffer_.erase(0, static_cast<std::size_t>(n));
    } else if (n < 0 && errno != EAGAIN && errno != EINTR) {
      throw ProtocolError(std::string("write to filler: ") + std::strerror(errno));
    }
  }

  void flush_blocking(Clock::time_point deadline) {
    while (!write_buffer_.empty() && Clock::now() < deadline) {
      pollfd fd{child_->stdin_fd(), POLLOUT, 0};
      if (::poll(&fd, 1, 50) > 0) {
        const ssize_t n = ::write(fd.fd, write_buffer_.data(), write_buffer_.size());
        if (n < 0 && errno != EAGAIN && errno != EINTR) break;
        if (n > 0) write_buffer_.erase(0, static_cast<std::size_t>(n));
      }
    }
    write_buffer_.clear();
  }

  ExternalFillerOptions options_;
  std::optional<ChildProcess> child_;
  std::string read_buffer_;
  std::string write_buffer_;
};

}  // namespace apesynth
