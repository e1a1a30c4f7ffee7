#pragma once

// The `pianist` command line: arena, play, validate, serve, trace.
// Exit codes: 0 success, 1 usage error, 2 runtime failure (including a
// model that fails validation).

#include <iosfwd>

namespace pianist::app {

int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

} // namespace pianist::app
