#include <string>
#include <vector>

#include "curvematch/commands.hpp"

int main(int argc, char** argv) {
  return curvematch::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
