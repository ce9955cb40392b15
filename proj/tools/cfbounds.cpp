#include <iostream>

#include "cfbounds/cli.hpp"

int main(int argc, char** argv) { return cfb::cli::run(argc, argv, std::cout, std::cerr); }
