#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ain {

// Entry point behind the `ainsim` binary. args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ain
