#include <iostream>

#include "swarmk/cli.hpp"

int main(int argc, char** argv) { return swarmk::run_cli(argc, argv, std::cout, std::cerr); }
