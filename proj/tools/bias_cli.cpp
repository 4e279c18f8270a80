#include <iostream>
#include <string>
#include <vector>

#include "lfbias/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return lfbias::run_cli(args, std::cout, std::cerr);
}
