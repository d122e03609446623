#include <iostream>

#include "storygraph/cli.hpp"

int main(int argc, char** argv) { return storygraph::run_cli(argc, argv, std::cout, std::cerr); }
