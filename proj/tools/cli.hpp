#pragma once

#include <iosfwd>

namespace eas::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kValidation = 1;
inline constexpr int kIo = 2;

/// Runs one command line. Normal output goes to `out`, one-line
/// diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace eas::cli
