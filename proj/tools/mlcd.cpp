#include <iostream>
#include <string>
#include <vector>

#include "mlcd/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return mlcd::run_cli(args, std::cout, std::cerr);
}
