/*
 * Copyright 2026 The SES Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end. Subcommands: select, score, bench-coverage,
// replay-sim, graph, tree.

#ifndef SES_TOOLS_CLI_H_
#define SES_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace ses::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitDataError = 3,
  kExitInfeasible = 4,
};

// `args` excludes the program name. Normal output goes to `out`, errors to
// `err` as "error: <ErrorName>: <message>".
int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace ses::cli

#endif  // SES_TOOLS_CLI_H_
