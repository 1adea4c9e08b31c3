#include "cli/cli.hpp"

int main(int argc, char** argv) { return rearrange::cli::run(argc, argv); }
