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

#ifndef MEMAUDIT_BACKEND_HPP_
#define MEMAUDIT_BACKEND_HPP_

// Model-backend contract: greedy generation and per-token log-likelihoods,
// plus the JSON wire protocol shared by the HTTP and stdio transports.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "memaudit/error.hpp"

namespace memaudit {

struct TokenLogprobs {
  std::vector<std::string> tokens;
  std::vector<double> logprobs;
  // Remote tokenizer could not reproduce the input exactly.
  bool lossy = false;

  std::string Text() const {
    std::string out;
    for (const std::string& t : tokens) out += t;
    return out;
  }

  double Sum() const {
    double s = 0.0;
    for (double lp : logprobs) s += lp;
    return s;
  }
};

enum class BackendKind { kBuiltinNgram, kHttpRemote, kStdioSubprocess };

inline std::string_view ToString(BackendKind kind) {
  switch (kind) {
    case BackendKind::kBuiltinNgram: return "ngram";
    case BackendKind::kHttpRemote: return "http";
    case BackendKind::kStdioSubprocess: return "stdio";
  }
  return "ngram";
}

inline BackendKind ParseBackendKind(std::string_view s) {
  if (s == "ngram") return BackendKind::kBuiltinNgram;
  if (s == "http") return BackendKind::kHttpRemote;
  if (s == "stdio") return BackendKind::kStdioSubprocess;
  throw Error(ErrorKind::kInvalidConfig, "unknown backend kind '" + std::string(s) + "'");
}

// Spec string: `[name=]kind[:endpoint][;key=value]...`, e.g.
//   ngram;order=5;dup=16
//   gpt2=http:http://localhost:8000/v1;max_new_tokens=64
//   local=stdio:python3 adapter.py --stdio
struct BackendDescriptor {
  std::string name;
  BackendKind kind = BackendKind::kBuiltinNgram;
  std::optional<std::string> endpoint;
  size_t max_new_tokens = 128;
  std::map<std::string, std::string> params;

  void Validate() const {
    if (name.empty()) throw Error(ErrorKind::kInvalidConfig, "backend name is empty");
    if (name.find_first_of("/\\ \t") != std::string::npos) {
      throw Error(ErrorKind::kInvalidConfig, "backend name '" + name + "' is not a valid file name");
    }
    if (kind != BackendKind::kBuiltinNgram && (!endpoint || endpoint->empty())) {
      throw Error(ErrorKind::kInvalidConfig, "backend '" + name + "' needs an endpoint");
    }
    if (max_new_tokens == 0) {
      throw Error(ErrorKind::kInvalidConfig, "max_new_tokens must be positive");
    }
  }

  std::string ToSpec() const {
    std::string s = name + "=" + std::string(ToString(kind));
    if (endpoint) s += ":" + *endpoint;
    s += ";max_new_tokens=" + std::to_string(max_new_tokens);
    for (const auto& [k, v] : params) s += ";" + k + "=" + v;
    return s;
  }

  static BackendDescriptor Parse(std::string_view spec) {
    BackendDescriptor d;
    std::vector<std::string_view> parts;
    size_t start = 0;
    while (true) {
      const size_t semi = spec.find(';', start);
      parts.push_back(spec.substr(start, semi == std::string_view::npos ? semi : semi - start));
      if (semi == std::string_view::npos) break;
      start = semi + 1;
    }
    std::string_view head = parts.front();
    const size_t colon = head.find(':');
    const size_t eq = head.find('=');
    if (eq != std::string_view::npos && eq < colon) {
      d.name = std::string(head.substr(0, eq));
      head.remove_prefix(eq + 1);
    }
    const size_t kind_end = head.find(':');
    d.kind = ParseBackendKind(head.substr(0, kind_end));
    if (kind_end != std::string_view::npos) d.endpoint = std::string(head.substr(kind_end + 1));
    if (d.name.empty()) d.name = std::string(ToString(d.kind));
    for (size_t i = 1; i < parts.size(); ++i) {
      if (parts[i].empty()) continue;
      const size_t at = parts[i].find('=');
      if (at == std::string_view::npos) {
        throw Error(ErrorKind::kInvalidConfig,
                    "backend option '" + std::string(parts[i]) + "' is not key=value");
      }
      const std::string key(parts[i].substr(0, at));
      const std::string value(parts[i].substr(at + 1));
      if (key == "max_new_tokens") {
        try {
          d.max_new_tokens = std::stoul(value);
        } catch (const std::logic_error&) {
          throw Error(ErrorKind::kInvalidConfig, "bad max_new_tokens '" + value + "'");
        }
      } else {
        d.params[key] = value;
      }
    }
    d.Validate();
    return d;
  }
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual const BackendDescriptor& descriptor() const = 0;

  // Continuation only (prompt excluded); deterministic for a fixed backend.
  virtual std::string Generate(const std::string& prompt, size_t max_new_tokens) = 0;

  virtual TokenLogprobs Logprobs(const std::string& text) = 0;

  // Identity used for cache keys: changes whenever outputs could change.
  virtual std::string Fingerprint() const { return descriptor().ToSpec(); }
};

namespace protocol {

inline nlohmann::json GenerateRequest(const std::string& prompt, size_t max_new_tokens) {
  return {{"op", "generate"}, {"prompt", prompt}, {"max_new_tokens", max_new_tokens}};
}

inline nlohmann::json LogprobsRequest(const std::string& text) {
  return {{"op", "logprobs"}, {"text", text}};
}

inline void ThrowIfError(const nlohmann::json& response) {
  if (!response.is_object()) {
    throw Error(ErrorKind::kProtocol, "response is not a JSON object");
  }
  if (auto it = response.find("error"); it != response.end()) {
    throw Error(ErrorKind::kProtocol, "backend returned error: " + it->dump());
  }
}

inline std::string ParseGenerateResponse(const nlohmann::json& response) {
  ThrowIfError(response);
  auto it = response.find("text");
  if (it == response.end() || !it->is_string()) {
    throw Error(ErrorKind::kProtocol, "generate response lacks string \"text\"");
  }
  return it->get<std::string>();
}

inline TokenLogprobs ParseLogprobsResponse(const nlohmann::json& response) {
  ThrowIfError(response);
  auto tokens = response.find("tokens");
  auto logprobs = response.find("logprobs");
  if (tokens == response.end() || !tokens->is_array() || logprobs == response.end() ||
      !logprobs->is_array()) {
    throw Error(ErrorKind::kProtocol, "logprobs response needs \"tokens\" and \"logprobs\" arrays");
  }
  TokenLogprobs out;
  for (const auto& t : *tokens) {
    if (!t.is_string()) throw Error(ErrorKind::kProtocol, "non-string token");
    out.tokens.push_back(t.get<std::string>());
  }
  for (const auto& lp : *logprobs) {
    if (!lp.is_number()) throw Error(ErrorKind::kProtocol, "non-numeric logprob");
    out.logprobs.push_back(lp.get<double>());
  }
  if (auto lossy = response.find("lossy"); lossy != response.end() && lossy->is_boolean()) {
    out.lossy = lossy->get<bool>();
  }
  return out;
}

inline nlohmann::json ToJson(const TokenLogprobs& lp) {
  nlohmann::json j = {{"tokens", lp.tokens}, {"logprobs", lp.logprobs}};
  if (lp.lossy) j["lossy"] = true;
  return j;
}

inline nlohmann::json ErrorResponse(std::string_view code, std::string_view message) {
  return {{"error", {{"code", code}, {"message", message}}}};
}

// Answers one wire request against a local backend; malformed requests
// yield an error object instead of throwing.
inline nlohmann::json Serve(Backend& backend, const nlohmann::json& request) {
  try {
    if (!request.is_object() || !request.contains("op") || !request["op"].is_string()) {
      return ErrorResponse("bad_request", "missing string field \"op\"");
    }
    const std::string op = request["op"].get<std::string>();
    if (op == "generate") {
      if (!request.contains("prompt") || !request["prompt"].is_string() ||
          !request.contains("max_new_tokens") || !request["max_new_tokens"].is_number_unsigned()) {
        return ErrorResponse("bad_request", "generate needs \"prompt\" and \"max_new_tokens\"");
      }
      return {{"text", backend.Generate(request["prompt"].get<std::string>(),
                                        request["max_new_tokens"].get<size_t>())}};
    }
    if (op == "logprobs") {
      if (!request.contains("text") || !request["text"].is_string()) {
        return ErrorResponse("bad_request", "logprobs needs \"text\"");
      }
      return ToJson(backend.Logprobs(request["text"].get<std::string>()));
    }
    return ErrorResponse("unknown_op", op);
  } catch (const std::exception& e) {
    return ErrorResponse("internal", e.what());
  }
}

}  // namespace protocol

// Greedy continuation of `prompt`; zero tokens short-circuits to "".
inline std::string GenerateGreedy(Backend& backend, const std::string& prompt,
                                  size_t max_new_tokens) {
  if (prompt.empty()) throw Error(ErrorKind::kInvalidArgument, "prompt must be non-empty");
  if (max_new_tokens == 0) return {};
  return backend.Generate(prompt, max_new_tokens);
}

// Per-token natural-log likelihoods. Responses are checked for alignment,
// finiteness and (unless flagged lossy) exact reconstruction of `text`.
inline TokenLogprobs ScoreLogprobs(Backend& backend, const std::string& text) {
  if (text.empty()) throw Error(ErrorKind::kInvalidArgument, "text must be non-empty");
  TokenLogprobs lp = backend.Logprobs(text);
  if (lp.tokens.size() != lp.logprobs.size()) {
    throw Error(ErrorKind::kProtocol, "tokens and logprobs differ in length");
  }
  if (lp.tokens.empty()) throw Error(ErrorKind::kProtocol, "backend returned no tokens");
  for (double v : lp.logprobs) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kProtocol, "non-finite logprob");
  }
  if (!lp.lossy && lp.Text() != text) {
    throw Error(ErrorKind::kProtocol, "tokens do not reconstruct the scored text");
  }
  return lp;
}

}  // namespace memaudit

#endif  // MEMAUDIT_BACKEND_HPP_
