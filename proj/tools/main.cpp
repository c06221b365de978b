#include <iostream>

#include "droc/cli.hpp"

int main(int argc, char** argv) { return droc::run_cli(argc, argv, std::cout, std::cerr); }
