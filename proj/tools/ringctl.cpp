#include <iostream>

#include "ringkit/cli/ringctl.hpp"

int main(int argc, char** argv) { return ringkit::cli::run(argc, argv, std::cout, std::cerr, std::cin); }
