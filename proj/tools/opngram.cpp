#include <iostream>

#include "opng/cli.hpp"

int main(int argc, char** argv) { return opng::cli::run(argc, argv, std::cin, std::cout, std::cerr); }
