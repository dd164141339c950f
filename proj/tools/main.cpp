#include "pwe/cli.hpp"

int main(int argc, char** argv) { return pwe::cli::run(argc, argv); }
