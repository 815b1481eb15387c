#include <iostream>

#include "protoagent/cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return protoagent::run_cli(args, std::cin, std::cout, std::cerr);
}
