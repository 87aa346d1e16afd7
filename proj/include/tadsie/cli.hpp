#pragma once

#include <string>
#include <vector>

namespace tadsie::cli {

// Entry point behind the `tadsie` binary. `args` excludes the program name.
// Returns the process exit status: 0 on success, nonzero with a diagnostic on
// stderr otherwise.
int run_cli(const std::vector<std::string>& args);

}  // namespace tadsie::cli
