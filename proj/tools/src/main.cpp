#include <iostream>

#include "fallwatch/cli/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return fallwatch::cli::run(args, std::cout, std::cerr);
}
