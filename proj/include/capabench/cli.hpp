#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace capabench {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // validation or evaluation failure, bad usage
inline constexpr int kExitIo = 2;       // I/O or adapter failure

/// Runs one `capabench` command. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Directory holding the shipped corpus, lexicon and manifests.
std::string default_data_dir();

}  // namespace capabench
