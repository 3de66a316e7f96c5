#pragma once

#include <string>
#include <vector>

namespace bookrel::cli {

/// Runs one `bookrel` subcommand. Returns 0 on success, 2 on usage errors,
/// 1 on any other failure.
int dispatch(int argc, char** argv);
/// `args` excludes the program name.
int dispatch(const std::vector<std::string>& args);

}  // namespace bookrel::cli
