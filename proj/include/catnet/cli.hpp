#ifndef CATNET_CLI_HPP
#define CATNET_CLI_HPP

#include <string>
#include <vector>

namespace catnet {

// Command-line entry point (testable in-process).  Exit codes: 0 success,
// 1 verification failure, 2 usage or configuration error.
int cli_main(const std::vector<std::string>& args);

}  // namespace catnet

#endif  // CATNET_CLI_HPP
