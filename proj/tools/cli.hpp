// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef METAMAT_TOOLS_CLI_HPP
#define METAMAT_TOOLS_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace metamat
{

enum ExitCode : int
{
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitConfig = 2,
  kExitNumerical = 3,
};

// Runs one CLI invocation; args excludes the program name.
int RunCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace metamat

#endif  // METAMAT_TOOLS_CLI_HPP
