#include <iostream>
#include <string>
#include <vector>

#include "stemsim/cli/commands.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return stemsim::cli::run_cli(args, std::cout, std::cerr);
}
