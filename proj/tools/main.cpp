#include <iostream>

#include "atpo/harness/cli.hpp"

int main(int argc, char** argv) { return atpo::harness::cli_main(argc, argv, std::cout, std::cerr); }
