#include "fmcf/cli.hpp"

int main(int argc, char** argv) { return fmcf::cli::run_main(argc, argv); }
