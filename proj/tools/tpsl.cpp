#include <iostream>

#include "tpsl/cli.hpp"

int main(int argc, char** argv) {
  return tpsl::cli::run(argc, argv, std::cin, std::cout, std::cerr);
}
