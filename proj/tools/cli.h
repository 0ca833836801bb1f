// Copyright 2026 The ShiftScope Authors
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

// Command-line front end. `run_cli` is the whole program minus process
// plumbing so tests can drive it in-process.
//
// Exit codes: 0 success, 1 runtime error (I/O, numerical failure, mismatched
// inputs), 2 usage or configuration error. Every command checks its arguments
// before touching the file system.

#ifndef SHIFTSCOPE_TOOLS_CLI_H_
#define SHIFTSCOPE_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace shiftscope::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace shiftscope::cli

#endif  // SHIFTSCOPE_TOOLS_CLI_H_
