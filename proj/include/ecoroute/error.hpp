// Copyright 2026 The Ecoroute Authors. All Rights Reserved.
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ecoroute {

enum class ErrorCode {
  kInvalidInput,
  kProviderError,
  kDegenerateTraining,
  kNotReady,
  kNoFeasibleArm,
  kNotFound,
  kConflict,
  kInternal,
};

std::string_view to_string(ErrorCode code);

// Every recoverable failure in the library is reported as an Error carrying
// a machine-readable code. The service layer maps codes onto HTTP statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // Returns a copy whose message is prefixed with `context`, e.g. the
  // pipeline stage or simulation step that failed.
  Error with_context(std::string_view context) const {
    return Error(code_, std::string(context) + ": " + what());
  }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_invalid(const std::string& message) {
  throw Error(ErrorCode::kInvalidInput, message);
}

// HTTP-style status class used by the wire API.
int http_status(ErrorCode code);

}  // namespace ecoroute
