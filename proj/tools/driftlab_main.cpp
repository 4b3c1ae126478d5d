#include <iostream>

#include "driftlab/cli.hpp"

int main(int argc, char** argv) { return driftlab::cli::run(argc, argv, std::cout, std::cerr); }
