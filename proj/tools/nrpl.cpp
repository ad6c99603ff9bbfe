#include "nrpl/cli.hpp"

int main(int argc, char** argv) { return nrpl::cli_main(argc, argv); }
