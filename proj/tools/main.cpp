#include <iostream>

#include "ntm/cli.hpp"

int main(int argc, char** argv) { return ntm::cli::run(argc, argv, std::cout, std::cerr); }
