#include "mpcclab/cli.hpp"

int main(int argc, char** argv) { return mpcclab::cli_main(argc, argv); }
