#pragma once

#include <iosfwd>

#include "uad/error.hpp"

namespace uad {

// Exit codes: 0 success, 2 usage error, 3 data error, 4 model
// incompatibility.
int exit_code_for(ErrorCode code);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace uad
