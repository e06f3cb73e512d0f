#pragma once

#include <string>
#include <vector>

namespace afop {

/// Entry point behind the afop binary; returns the process exit code
/// (0 ok, 1 stage failure, 2 usage/config error).
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace afop
