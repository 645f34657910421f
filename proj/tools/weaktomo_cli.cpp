#include <iostream>

#include "weaktomo/cli.hpp"

int main(int argc, char **argv) { return weaktomo::run_cli(argc, argv, std::cout, std::cerr); }
