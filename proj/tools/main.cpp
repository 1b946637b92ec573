#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return stsae::cli_main(argc, argv, std::cout, std::cerr); }
