#include <string>
#include <vector>

#include "csigan/cli.hpp"

int main(int argc, char **argv) {
  std::vector<std::string> args(argv, argv + argc);
  return csigan::cli::run(args);
}
