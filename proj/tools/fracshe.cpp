#include <iostream>
#include <string>
#include <vector>

#include "fracshe/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fracshe::dispatch(args, std::cout, std::cerr);
}
