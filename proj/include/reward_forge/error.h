// Copyright 2026 The RewardForge Authors.
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

#ifndef REWARD_FORGE_ERROR_H_
#define REWARD_FORGE_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace reward_forge {

enum class ErrorCode {
  kInvalidArgument,
  kDimMismatch,
  kShapeMismatch,
  kBadMagic,
  kVersionMismatch,
  kSizeMismatch,
  kNonFinite,
  kParse,
  kOutOfRange,
  kSchemeRequirement,
  kDegenerateWeights,
  kNonFiniteLoss,
  kIo,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (the CLI, the scoring service) can map it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Fail(ErrorCode code, const std::string& message);

inline void Require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) Fail(code, message);
}

}  // namespace reward_forge

#endif  // REWARD_FORGE_ERROR_H_
