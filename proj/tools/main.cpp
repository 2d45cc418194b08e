#include <iostream>

#include "czsim/cli.hpp"

int main(int argc, char** argv) { return czsim::run_cli(argc, argv, std::cout, std::cerr); }
