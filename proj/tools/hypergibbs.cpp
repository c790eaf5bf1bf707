#include <iostream>
#include <string>
#include <vector>

#include "hypergibbs/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hypergibbs::cli_run(args, std::cout, std::cerr);
}
