#include <iostream>

#include "moenet/cli.hpp"

int main(int argc, char** argv) { return moenet::run_cli(argc, argv, std::cout, std::cerr); }
