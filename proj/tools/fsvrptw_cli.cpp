#include <iostream>

#include "fsvrptw/cli.hpp"

int main(int argc, char** argv) { return fsvrptw::run_cli(argc, argv, std::cout, std::cerr); }
