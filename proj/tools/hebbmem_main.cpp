#include "hebbmem/cli.hpp"

int main(int argc, char** argv) { return hebbmem::cli::parse_and_dispatch(argc, argv); }
