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


#ifndef REWARD_FORGE_TOOLS_CLI_H_
#define REWARD_FORGE_TOOLS_CLI_H_

#include <iosfwd>

namespace reward_forge {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

// Runs one subcommand. Results go to out, diagnostics and usage to err.
int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace reward_forge

#endif  // REWARD_FORGE_TOOLS_CLI_H_
