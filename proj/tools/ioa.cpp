#include <iostream>
#include <string>
#include <vector>

#include "ioa/spec.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ioa::spec::run_cli(args, std::cout, std::cerr);
}
