#pragma once

#include <iosfwd>

namespace numamap {

// Exit codes: 0 success, 1 validation error (including bad usage), 2 runtime error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace numamap
