#pragma once

#include <ostream>

namespace fsvrptw {

// Exit codes: 0 success, 1 usage or configuration error, 2 stall.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace fsvrptw
