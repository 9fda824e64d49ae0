#include <iostream>

#include "surrogate/cli.hpp"

int main(int argc, char** argv) {
  return surrogate::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
