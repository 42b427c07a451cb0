#include <string>
#include <vector>

#include "qxfer/cli.hpp"

int main(int argc, char** argv) {
  return qxfer::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
