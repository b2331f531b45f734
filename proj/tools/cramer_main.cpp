#include <iostream>

#include "cramer/cli.hpp"

int main(int argc, char** argv) { return cramer::run_cli(argc, argv, std::cout, std::cerr); }
