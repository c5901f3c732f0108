#include "mdlab/cli.hpp"

int main(int argc, char** argv) { return mdlab::cli::run(argc, argv); }
