#include "numamap/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return numamap::run_cli(argc, argv, std::cout, std::cerr); }
