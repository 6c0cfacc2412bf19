#include "fwdsmile/cli.hpp"

int main(int argc, char** argv) { return fwdsmile::cli::main(argc, argv); }
