#pragma once

#include <iosfwd>

namespace wspam {

/// Entry point of the wspam tool. Returns 0 on success, 1 on a usage
/// error, 2 when an input is unreadable or malformed.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wspam
