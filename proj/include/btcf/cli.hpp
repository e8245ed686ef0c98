#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace btcf::cli {

/// Entry point of the `btcf` tool. Returns 0 on success, 1 on a runtime
/// error (diagnostic on `err`), 2 on a usage error.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

/// Same, with the arguments after the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Bundled fixtures: $BTCF_FIXTURES_DIR if set, else the source tree copy.
std::filesystem::path fixtures_dir();

}  // namespace btcf::cli
