#include <iostream>

#include "s2plume/cli.hpp"

int main(int argc, char** argv) {
  return s2plume::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
