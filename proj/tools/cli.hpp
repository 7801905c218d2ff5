#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace cwlssvm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;

/// Bad or inconsistent command-line options.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Runs one command (gen, fit, predict). Messages go to `err`; predictions
/// without --out go to `out`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace cwlssvm::cli
