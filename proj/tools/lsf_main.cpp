#include "lsf/cli.hpp"

int main(int argc, char** argv) { return lsf::cli_dispatch(argc, argv); }
