#include <iostream>

#include "tajima/cli.hpp"

int main(int argc, char** argv) { return tajima::run_cli(argc, argv, std::cout, std::cerr); }
