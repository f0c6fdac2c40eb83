#include "ragx/cli.hpp"

#include <unistd.h>

#include <iostream>

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return ragx::run_cli(args, std::cout, std::cerr, isatty(STDOUT_FILENO) != 0);
}
