#include <iostream>

#include "impulsectl/cli.hpp"

int main(int argc, char** argv) { return impulsectl::run_cli(argc, argv, std::cout, std::cerr); }
