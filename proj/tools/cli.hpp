#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace bunching::cli {

//! Runs one command line (without the program name) and returns the exit
//! code: 0 ok, 2 input error, 3 degenerate estimation, 4 unreliable inference.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace bunching::cli
