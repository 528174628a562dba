#include <iostream>

#include "testport/cli.hpp"

int main(int argc, char** argv) { return testport::cli::main(argc, argv, std::cout, std::cerr); }
