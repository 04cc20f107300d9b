#include <iostream>

#include "fcav_cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fcav::cli::run_cli(args, std::cout, std::cerr);
}
