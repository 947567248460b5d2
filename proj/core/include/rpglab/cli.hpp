#pragma once

#include <string>
#include <vector>

namespace rpglab {

/// Entry point shared by the rpglab binary and the tests. `args` excludes the
/// program name. Returns the process exit code: 0 success, 2 usage or config
/// error, 3 runtime failure (aborted training, failed verification).
int cli_main(const std::vector<std::string>& args);

} // namespace rpglab
