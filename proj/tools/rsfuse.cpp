#include <iostream>

#include "rsfusion/cli.hpp"

int main(int argc, char** argv) { return rsfusion::run_cli(argc, argv, std::cout, std::cerr); }
