#include <iostream>

#include "ramat/cli.hpp"

int main(int argc, char** argv) { return ramat::run_cli(argc, argv, std::cout, std::cerr); }
