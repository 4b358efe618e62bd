#include <iostream>
#include <string>
#include <vector>

#include "nanoqmc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return nanoqmc::run_cli(args, std::cerr);
}
