#ifndef HILL_CLI_HPP
#define HILL_CLI_HPP

#include <string>
#include <vector>

namespace hill {

// Command-line front end. Exit status: 0 success, 1 verification failure,
// 2 bad arguments.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace hill

#endif
