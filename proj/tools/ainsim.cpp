#include <iostream>
#include <string>
#include <vector>

#include "ain/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return ain::run_cli(args, std::cout, std::cerr);
}
