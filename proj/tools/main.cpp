#include <iostream>

#include "cepdsl/interface/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return cepdsl::cli_main(args, std::cout, std::cerr);
}
