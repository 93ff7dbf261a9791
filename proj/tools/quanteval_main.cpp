#include <iostream>

#include "quanteval/cli.hpp"

int main(int argc, char** argv) { return quanteval::run_cli(argc, argv, std::cout, std::cerr); }
