#include <iostream>

#include "spic/cli.hpp"

int main(int argc, char** argv) { return spic::run_cli(argc, argv, std::cout, std::cerr); }
