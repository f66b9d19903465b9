#include "anb/cli.hpp"

int main(int argc, char **argv) { return anb::cli::run(argc, argv); }
