#include <string>
#include <vector>

#include "fbsnet/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fbsnet::run(args);
}
