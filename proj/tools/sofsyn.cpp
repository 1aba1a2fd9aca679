#include <iostream>

#include "sofsyn/cli.hpp"

int main(int argc, char** argv) { return sofsyn::run_cli(argc, argv, std::cout, std::cerr); }
