#include <iostream>
#include <string>
#include <vector>

#include "p2m/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return p2m::cli::run(args, std::cout, std::cerr);
}
