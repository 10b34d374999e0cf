#include <string>
#include <vector>

#include "catnet/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return catnet::cli_main(args);
}
