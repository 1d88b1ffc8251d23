#include <iostream>
#include <string>
#include <vector>

#include "csner/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return csner::cli::run(args, std::cout, std::cerr);
}
