#include <iostream>

#include "idil/cli/commands.hpp"

int main(int argc, char** argv) { return idil::cli::run(argc, argv, std::cout, std::cerr); }
