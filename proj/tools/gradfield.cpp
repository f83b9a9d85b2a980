#include <iostream>

#include "gradfield/cli.hpp"

int main(int argc, char** argv) { return gradfield::run_cli(argc, argv, std::cout, std::cerr); }
