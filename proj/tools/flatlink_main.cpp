#include "flatlink/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return flatlink::cli::run(args, std::cout, std::cerr);
}
