#pragma once

#include <iosfwd>

namespace forkgame::cli {

/// Whole command line. Exit codes: 0 ok, 1 domain or config error, 2 I/O error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace forkgame::cli
