#include <iostream>
#include <string>
#include <vector>

#include "ebmss/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ebmss::run_cli(args, std::cout, std::cerr);
}
