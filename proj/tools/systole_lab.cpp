#include <iostream>

#include "systole/cli.hpp"

int main(int argc, char** argv) { return systole::run_cli(argc, argv, std::cout, std::cerr); }
