#include <iostream>

#include "tsroute/cli.hpp"

int main(int argc, char** argv) { return tsroute::run_cli(argc, argv, std::cout, std::cerr); }
