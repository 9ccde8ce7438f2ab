#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vbglmm {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumerical = 3 };

/// Entry point of the `vbglmm` tool; args excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vbglmm
