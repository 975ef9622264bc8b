#include <iostream>

#include "eyecorp/cli.hpp"

int main(int argc, char** argv) {
  return eyecorp::cli::run(argc, argv, std::cout, std::cerr);
}
