#include <iostream>

#include "worldkit/cli.hpp"

int main(int argc, char** argv) { return worldkit::cli_main(argc, argv, std::cout, std::cerr); }
