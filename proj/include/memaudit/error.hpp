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

#ifndef MEMAUDIT_ERROR_HPP_
#define MEMAUDIT_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace memaudit {

// Broad failure classes; the CLI maps each one to a distinct exit code.
enum class ErrorKind {
  kInvalidArgument,
  kInvalidConfig,
  kMissingInput,
  kParse,
  kTransport,
  kProtocol,
  kLeakage,
  kInternal,
};

inline std::string_view ToString(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kInvalidConfig: return "invalid_config";
    case ErrorKind::kMissingInput: return "missing_input";
    case ErrorKind::kParse: return "parse_error";
    case ErrorKind::kTransport: return "transport_error";
    case ErrorKind::kProtocol: return "protocol_error";
    case ErrorKind::kLeakage: return "leakage_guard";
    case ErrorKind::kInternal: return "internal";
  }
  return "internal";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace memaudit

#endif  // MEMAUDIT_ERROR_HPP_
