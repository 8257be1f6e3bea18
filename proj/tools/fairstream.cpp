#include <iostream>

#include "fairstream/cli.hpp"

int main(int argc, char** argv) {
  return fairstream::cli_main(argc, argv, std::cout, std::cerr);
}
