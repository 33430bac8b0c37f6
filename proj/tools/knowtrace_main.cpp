#include <iostream>

#include "knowtrace/cli.hpp"

int main(int argc, char** argv) {
    return knowtrace::run_cli(argc, argv, std::cout, std::cerr);
}
