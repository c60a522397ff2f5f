// Copyright 2026 The memaudit Authors.
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

#ifndef MEMAUDIT_REMOTE_HPP_
#define MEMAUDIT_REMOTE_HPP_

// Remote backends speaking the JSON wire protocol over HTTP or over the
// stdin/stdout of a subprocess, a retrying policy, and an on-disk response
// cache that makes interrupted runs resumable.

#include <fcntl.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "memaudit/backend.hpp"
#include "memaudit/digest.hpp"
#include "memaudit/error.hpp"

namespace memaudit {

// Bearer token sent to HTTP backends when set.
inline constexpr const char* kAuthTokenEnv = "MEMAUDIT_BACKEND_TOKEN";

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds base_delay{200};
};

// Retries transport failures with exponential backoff; anything else
// propagates immediately.
template <typename Fn>
auto WithRetry(const RetryPolicy& policy, const std::string& what, Fn&& fn) {
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kTransport) throw;
      if (attempt >= policy.attempts) {
        throw Error(ErrorKind::kTransport, what + " failed after " + std::to_string(attempt) +
                                               " attempts: " + e.what());
      }
      std::this_thread::sleep_for(policy.base_delay * (1 << (attempt - 1)));
    }
  }
}

namespace internal {

inline RetryPolicy RetryPolicyFrom(const BackendDescriptor& d) {
  RetryPolicy policy;
  if (auto it = d.params.find("retries"); it != d.params.end()) {
    policy.attempts = std::max(1, std::stoi(it->second));
  }
  if (auto it = d.params.find("retry_delay_ms"); it != d.params.end()) {
    policy.base_delay = std::chrono::milliseconds(std::stol(it->second));
  }
  return policy;
}

}  // namespace internal

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(BackendDescriptor descriptor)
      : descriptor_(std::move(descriptor)), retry_(internal::RetryPolicyFrom(descriptor_)) {
    const std::string& url = *descriptor_.endpoint;
    const size_t scheme = url.find("://");
    const size_t path = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    base_ = path == std::string::npos ? url : url.substr(0, path);
    path_ = path == std::string::npos ? "/" : url.substr(path);
    if (auto it = descriptor_.params.find("timeout_s"); it != descriptor_.params.end()) {
      timeout_s_ = std::stoi(it->second);
    }
    if (const char* token = std::getenv(kAuthTokenEnv)) token_ = token;
  }

  const BackendDescriptor& descriptor() const override { return descriptor_; }

  std::string Generate(const std::string& prompt, size_t max_new_tokens) override {
    return protocol::ParseGenerateResponse(Call(protocol::GenerateRequest(prompt, max_new_tokens)));
  }

  TokenLogprobs Logprobs(const std::string& text) override {
    return protocol::ParseLogprobsResponse(Call(protocol::LogprobsRequest(text)));
  }

 private:
  nlohmann::json Call(const nlohmann::json& request) {
    return WithRetry(retry_, "backend '" + descriptor_.name + "'", [&] {
      httplib::Client client(base_);
      client.set_connection_timeout(timeout_s_, 0);
      client.set_read_timeout(timeout_s_, 0);
      httplib::Headers headers;
      if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
      auto res = client.Post(path_, headers, request.dump(), "application/json");
      if (!res) {
        throw Error(ErrorKind::kTransport, "HTTP request to " + base_ + path_ + " failed: " +
                                               httplib::to_string(res.error()));
      }
      if (res->status >= 500) {
        throw Error(ErrorKind::kTransport, "HTTP status " + std::to_string(res->status));
      }
      nlohmann::json body = nlohmann::json::parse(res->body, nullptr, false);
      if (body.is_discarded()) {
        throw Error(ErrorKind::kProtocol, "backend response is not JSON");
      }
      if (res->status != 200) protocol::ThrowIfError(body);
      if (res->status != 200) {
        throw Error(ErrorKind::kProtocol, "HTTP status " + std::to_string(res->status));
      }
      return body;
    });
  }

  BackendDescriptor descriptor_;
  RetryPolicy retry_;
  std::string base_;
  std::string path_;
  std::string token_;
  int timeout_s_ = 300;
};

// Subprocess speaking one JSON object per line on stdin/stdout. Calls are
// serialized so requests and responses stay strictly ordered; a dead
// child is restarted on the next attempt.
class StdioBackend : public Backend {
 public:
  explicit StdioBackend(BackendDescriptor descriptor)
      : descriptor_(std::move(descriptor)), retry_(internal::RetryPolicyFrom(descriptor_)) {
    ::signal(SIGPIPE, SIG_IGN);
  }

  ~StdioBackend() override { Stop(); }

  StdioBackend(const StdioBackend&) = delete;
  StdioBackend& operator=(const StdioBackend&) = delete;

  const BackendDescriptor& descriptor() const override { return descriptor_; }

  std::string Generate(const std::string& prompt, size_t max_new_tokens) override {
    return protocol::ParseGenerateResponse(Call(protocol::GenerateRequest(prompt, max_new_tokens)));
  }

  TokenLogprobs Logprobs(const std::string& text) override {
    return protocol::ParseLogprobsResponse(Call(protocol::LogprobsRequest(text)));
  }

 private:
  nlohmann::json Call(const nlohmann::json& request) {
    std::lock_guard<std::mutex> lock(mu_);
    return WithRetry(retry_, "backend '" + descriptor_.name + "'", [&] {
      if (pid_ <= 0) Start();
      const std::string line = request.dump() + "\n";
      size_t written = 0;
      while (written < line.size()) {
        const ssize_t n = ::write(to_child_, line.data() + written, line.size() - written);
        if (n <= 0) {
          Stop();
          throw Error(ErrorKind::kTransport, "cannot write to backend subprocess");
        }
        written += static_cast<size_t>(n);
      }
      char* buf = nullptr;
      size_t cap = 0;
      const ssize_t n = ::getline(&buf, &cap, from_child_);
      std::string response = n > 0 ? std::string(buf, static_cast<size_t>(n)) : std::string();
      std::free(buf);
      if (n <= 0) {
        Stop();
        throw Error(ErrorKind::kTransport, "backend subprocess closed its output");
      }
      nlohmann::json body = nlohmann::json::parse(response, nullptr, false);
      if (body.is_discarded()) {
        throw Error(ErrorKind::kProtocol, "backend subprocess wrote a non-JSON line");
      }
      return body;
    });
  }

  void Start() {
    int in_pipe[2], out_pipe[2];
    if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) {
      throw Error(ErrorKind::kTransport, "pipe() failed");
    }
    const pid_t pid = ::fork();
    if (pid < 0) throw Error(ErrorKind::kTransport, "fork() failed");
    if (pid == 0) {
      ::dup2(in_pipe[0], STDIN_FILENO);
      ::dup2(out_pipe[1], STDOUT_FILENO);
      ::close(in_pipe[0]);
      ::close(in_pipe[1]);
      ::close(out_pipe[0]);
      ::close(out_pipe[1]);
      ::execl("/bin/sh", "sh", "-c", descriptor_.endpoint->c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    ::fcntl(in_pipe[1], F_SETFD, FD_CLOEXEC);
    ::fcntl(out_pipe[0], F_SETFD, FD_CLOEXEC);
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = ::fdopen(out_pipe[0], "r");
  }

  void Stop() {
    if (to_child_ >= 0) ::close(to_child_);
    if (from_child_ != nullptr) std::fclose(from_child_);
    if (pid_ > 0) {
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
    to_child_ = -1;
    from_child_ = nullptr;
    pid_ = -1;
  }

  BackendDescriptor descriptor_;
  RetryPolicy retry_;
  std::mutex mu_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  FILE* from_child_ = nullptr;
};

// Memoizes responses on disk under `dir`, keyed by SHA-256 of the inner
// backend's fingerprint and the request body.
class CachingBackend : public Backend {
 public:
  CachingBackend(std::unique_ptr<Backend> inner, std::filesystem::path dir)
      : inner_(std::move(inner)), dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  const BackendDescriptor& descriptor() const override { return inner_->descriptor(); }
  std::string Fingerprint() const override { return inner_->Fingerprint(); }

  std::string Generate(const std::string& prompt, size_t max_new_tokens) override {
    const nlohmann::json request = protocol::GenerateRequest(prompt, max_new_tokens);
    return protocol::ParseGenerateResponse(Lookup(request, [&] {
      return nlohmann::json{{"text", inner_->Generate(prompt, max_new_tokens)}};
    }));
  }

  TokenLogprobs Logprobs(const std::string& text) override {
    const nlohmann::json request = protocol::LogprobsRequest(text);
    return protocol::ParseLogprobsResponse(
        Lookup(request, [&] { return protocol::ToJson(inner_->Logprobs(text)); }));
  }

  // Requests that reached the inner backend.
  size_t misses() const { return misses_.load(); }
  size_t hits() const { return hits_.load(); }

 private:
  template <typename Fn>
  nlohmann::json Lookup(const nlohmann::json& request, Fn&& compute) {
    std::call_once(fingerprint_once_, [this] { fingerprint_ = inner_->Fingerprint(); });
    const std::string key = Sha256Hex(fingerprint_ + "\n" + request.dump());
    const std::filesystem::path path = dir_ / key.substr(0, 2) / (key + ".json");
    if (std::ifstream in(path, std::ios::binary); in) {
      nlohmann::json cached = nlohmann::json::parse(in, nullptr, false);
      if (!cached.is_discarded()) {
        ++hits_;
        return cached;
      }
    }
    ++misses_;
    nlohmann::json response = compute();
    std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp" + std::to_string(::getpid()) + "-" +
           std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    {
      std::ofstream out(tmp, std::ios::binary);
      out << response.dump();
    }
    std::filesystem::rename(tmp, path);
    return response;
  }

  std::unique_ptr<Backend> inner_;
  std::filesystem::path dir_;
  std::once_flag fingerprint_once_;
  std::string fingerprint_;
  std::atomic<size_t> misses_{0};
  std::atomic<size_t> hits_{0};
};

}  // namespace memaudit

#endif  // MEMAUDIT_REMOTE_HPP_
