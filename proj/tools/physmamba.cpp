// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "physmamba/cli.hpp"

int main(int argc, char** argv) { return physmamba::cli::run(argc, argv, std::cout, std::cerr); }
