// Copyright 2026 The partcons Authors.
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

#pragma once

#include <stdexcept>
#include <string>

namespace partcons {

enum class ErrorCode {
  kInvalidArgument,  // precondition / validation failure
  kIo,               // file could not be opened, read or written
  kBadMagic,
  kBadVersion,
  kTruncated,
  kMalformed,        // structurally wrong file content (bad shape, bad CSV row)
  kNormalization,    // unit-norm invariant violated
  kNonFinite,
  kDegenerate,       // near-zero vector where a direction is required
  kShapeMismatch,
};

const char* error_code_name(ErrorCode code) noexcept;

/// Every failure raised by the library carries a code so callers (and the C
/// API) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorCode::kInvalidArgument, message);
}

}  // namespace partcons
