#include "sptcov/cli.hpp"

int main(int argc, char** argv) { return sptcov::run_cli(argc, argv); }
