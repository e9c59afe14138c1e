#include "paace/app.hpp"

#include <iostream>

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return paace::cli_main(args, std::cout, std::cerr);
}
