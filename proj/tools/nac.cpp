#include "cli.hpp"

int main(int argc, char** argv) { return nac::cli::run(argc, argv); }
