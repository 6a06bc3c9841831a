#include <iostream>

#include "heartlab/cli.hpp"

int main(int argc, char** argv) { return heartlab::cli::run(argc, argv, std::cout, std::cerr); }
