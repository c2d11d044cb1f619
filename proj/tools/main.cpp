#include "ebcs/cli.hpp"

int main(int argc, char** argv) { return ebcs::cli::run(argc, argv); }
