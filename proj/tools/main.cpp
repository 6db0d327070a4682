#include <iostream>

#include "trainperf/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return trainperf::cli::run(args, std::cout, std::cerr);
}
