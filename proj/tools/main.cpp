#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "cli.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    return subpois::cli::run(args, std::cout, std::cerr, [](const char* name) { return std::getenv(name); });
}
