#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace fmgraph::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kDataError = 3, kConvergenceError = 4 };

/// `key = value` pairs from a config file, in file order. Blank lines and
/// `#` comments are skipped; malformed lines throw fmgraph::InvalidArgument.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path);

/// Entry point shared by the executable and the tests.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fmgraph::cli
