#include <iostream>

#include "decisive/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return decisive::run_cli(args, std::cin, std::cout, std::cerr);
}
