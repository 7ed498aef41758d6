#include <iostream>

#include "bcplink/cli.hpp"

int main(int argc, char** argv) {
  return bcplink::cli::run_cli(argc, argv, std::cout, std::cerr);
}
