#pragma once

#include <ostream>

namespace cbi::cli {

// Exit codes: 0 success, 1 numeric failure, 2 hypothesis mismatch, 64 usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cbi::cli
