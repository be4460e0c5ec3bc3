#include <iostream>

#include "latentedit/cli.hpp"

int main(int argc, char** argv) {
  return latentedit::cli::run(argc, argv, std::cout, std::cerr);
}
