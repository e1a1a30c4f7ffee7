#include <iostream>

#include "pianist/app/cli.hpp"

int main(int argc, char** argv) { return pianist::app::run_cli(argc, argv, std::cin, std::cout, std::cerr); }
