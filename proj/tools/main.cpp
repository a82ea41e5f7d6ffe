#include <iostream>

#include "csheaf/cli.hpp"

int main(int argc, char** argv) { return csheaf::cli::run(argc, argv, std::cout, std::cerr); }
