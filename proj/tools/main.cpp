#include "beamxfer/cli.hpp"

int main(int argc, char** argv) { return beamxfer::cli::run(argc, argv); }
