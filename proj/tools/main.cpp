#include "ruinex/cli.hpp"

int main(int argc, char** argv) { return ruinex::cli::run(argc, argv); }
