#include <iostream>

#include "rsvi/cli.hpp"

int main(int argc, char** argv) { return rsvi::cli::run_cli(argc, argv, std::cout, std::cerr); }
