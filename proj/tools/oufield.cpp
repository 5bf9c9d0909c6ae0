#include <iostream>

#include "oufield/cli.hpp"

int main(int argc, char** argv) { return oufield::cli::run(argc, argv, std::cout, std::cerr); }
