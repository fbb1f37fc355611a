#include <iostream>

#include "uad/cli_app.hpp"

int main(int argc, char** argv) {
    return uad::run_cli(argc, argv, std::cout, std::cerr);
}
