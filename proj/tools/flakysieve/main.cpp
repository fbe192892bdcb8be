#include <iostream>
#include <string>
#include <vector>

#include "flakysieve/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return flakysieve::cli::run(args, std::cout, std::cerr);
}
