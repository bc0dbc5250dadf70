// Copyright 2026 The lamcmc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/// \file
/// Client for models that run as a subprocess speaking the line protocol of
/// docs/protocol.md over stdin/stdout:
///
///   model  -> client   lamcmc-model 1 <dim>
///   client -> model    v1 <id> <x_1> ... <x_d>
///   model  -> client   <id> ok <value>       |   <id> error <message>
///
/// The client closes the model's stdin to request shutdown. POSIX only.

#ifndef LAMCMC_EXTERNAL_MODEL_HPP
#define LAMCMC_EXTERNAL_MODEL_HPP

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <chrono>
#include <cstring>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "lamcmc/errors.hpp"
#include "lamcmc/model.hpp"
#include "lamcmc/textio.hpp"

namespace lamcmc {

inline constexpr int kProtocolVersion = 1;

class ExternalModel final : public TargetModel {
 public:
  using Clock = std::chrono::steady_clock;

  ExternalModel(std::vector<std::string> argv, std::size_t dim,
                std::chrono::milliseconds timeout = std::chrono::seconds(600))
      : TargetModel(dim), argv_(std::move(argv)), timeout_(timeout) {
    if (argv_.empty()) throw ConfigError("target.external.command", "empty command");
    // A dead model must surface as EPIPE, not kill the sampler.
    ::signal(SIGPIPE, SIG_IGN);
    spawn();
    handshake();
  }

  ~ExternalModel() override { shutdown(); }

  std::string name() const override { return "external:" + argv_.front(); }
  pid_t pid() const noexcept { return pid_; }

 protected:
  double do_evaluate(std::span<const double> x) override {
    if (pid_ <= 0) throw ModelError("external model is not running");
    const std::uint64_t id = next_id_++;
    std::string req = "v1 " + std::to_string(id);
    for (double v : x) {
      req += ' ';
      req += format_double(v);
    }
    req += '\n';
    write_all(req);
    const std::string line = read_line(Clock::now() + timeout_);

    std::istringstream in(line);
    std::string rid, status;
    in >> rid >> status;
    if (rid != std::to_string(id))
      fail("malformed response (expected id " + std::to_string(id) + "): '" + line + "'");
    if (status == "error") {
      std::string msg;
      std::getline(in, msg);
      throw ModelError("external model reported error:" + msg);
    }
    std::string token;
    in >> token;
    std::string rest;
    if (status != "ok" || token.empty() || (in >> rest))
      fail("malformed response: '" + line + "'");
    double v = 0.0;
    if (!parse_double(token, v)) fail("malformed value in response: '" + line + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) {
    shutdown();
    throw ModelError(what);
  }

  void spawn() {
    int to_child[2], from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0 || ::pipe2(from_child, O_CLOEXEC) != 0)
      throw ModelError(std::string("pipe failed: ") + std::strerror(errno));
    pid_ = ::fork();
    if (pid_ < 0) throw ModelError(std::string("fork failed: ") + std::strerror(errno));
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      std::vector<char*> args;
      for (auto& a : argv_) args.push_back(a.data());
      args.push_back(nullptr);
      ::execvp(args[0], args.data());
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
  }

  void handshake() {
    const std::string line = read_line(Clock::now() + timeout_);
    std::istringstream in(line);
    std::string tag;
    int version = 0;
    std::size_t dim = 0;
    if (!(in >> tag >> version >> dim) || tag != "lamcmc-model")
      fail("bad handshake from external model: '" + line + "'");
    if (version != kProtocolVersion)
      fail("external model speaks protocol " + std::to_string(version) + ", expected " +
           std::to_string(kProtocolVersion));
    if (dim != this->dim())
      fail("external model declares dim " + std::to_string(dim) + ", configured " +
           std::to_string(this->dim()));
  }

  void write_all(const std::string& s) {
    std::size_t off = 0;
    while (off < s.size()) {
      const ssize_t n = ::write(in_fd_, s.data() + off, s.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(std::string("write to external model failed: ") + std::strerror(errno) + exit_note());
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line(Clock::time_point deadline) {
    for (;;) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
      if (left.count() <= 0) fail("external model timed out after " + std::to_string(timeout_.count()) + " ms");
      pollfd pfd{out_fd_, POLLIN, 0};
      const int r = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
      if (r < 0) {
        if (errno == EINTR) continue;
        fail(std::string("poll failed: ") + std::strerror(errno));
      }
      if (r == 0) continue;
      char chunk[4096];
      const ssize_t n = ::read(out_fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(std::string("read from external model failed: ") + std::strerror(errno));
      }
      if (n == 0) fail("external model closed its output" + exit_note());
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  std::string exit_note() {
    if (pid_ <= 0) return {};
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      const pid_t r = ::waitpid(pid_, &status, WNOHANG);
      if (r == pid_) {
        pid_ = -1;
        if (WIFEXITED(status)) return " (exit status " + std::to_string(WEXITSTATUS(status)) + ")";
        if (WIFSIGNALED(status)) return " (killed by signal " + std::to_string(WTERMSIG(status)) + ")";
        return {};
      }
      ::usleep(2000);
    }
    return {};
  }

  void shutdown() noexcept {
    if (in_fd_ >= 0) ::close(in_fd_);
    in_fd_ = -1;
    if (pid_ > 0) {
      int status = 0;
      bool reaped = false;
      for (int i = 0; i < 100 && !reaped; ++i) {
        reaped = ::waitpid(pid_, &status, WNOHANG) == pid_;
        if (!reaped) ::usleep(1000);
      }
      if (!reaped) {
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, &status, 0);
      }
      pid_ = -1;
    }
    if (out_fd_ >= 0) ::close(out_fd_);
    out_fd_ = -1;
  }

  std::vector<std::string> argv_;
  std::chrono::milliseconds timeout_;
  pid_t pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  std::string buffer_;
  std::uint64_t next_id_ = 1;
};

}  // namespace lamcmc

#endif  // LAMCMC_EXTERNAL_MODEL_HPP
