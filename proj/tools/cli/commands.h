// Copyright 2026 The tempssvm Authors.
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

#ifndef TEMPSSVM_TOOLS_COMMANDS_H_
#define TEMPSSVM_TOOLS_COMMANDS_H_

#include <exception>
#include <iosfwd>
#include <string>
#include <vector>

namespace tempssvm::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,      // bad flags or configuration
  kExitData = 2,       // unreadable or inconsistent input, failed check
  kExitInvariant = 3,  // internal invariant breach
};

// Parses `args` (without the program name) and runs one subcommand. Normal
// output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Exit code for an exception escaping a subcommand.
int exit_code_for(const std::exception& e);

}  // namespace tempssvm::cli

#endif  // TEMPSSVM_TOOLS_COMMANDS_H_
