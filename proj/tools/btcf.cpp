#include <iostream>

#include "btcf/cli.hpp"

int main(int argc, char** argv) { return btcf::cli::run(argc, argv, std::cout, std::cerr); }
