#include "cli.hpp"

#include <iostream>

int main(int argc, char **argv) { return famlies::cli::run(argc, argv, std::cout, std::cerr); }
