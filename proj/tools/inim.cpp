#include <iostream>

#include "inim/cli.hpp"

int main(int argc, char** argv) { return inim::run_cli(argc, argv, std::cout, std::cerr); }
