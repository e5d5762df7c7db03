#include "drc/cli.hpp"

int main(int argc, char** argv) { return drc::cli::main(argc, argv); }
