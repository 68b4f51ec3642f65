#include "dagnas/cli.hpp"

int main(int argc, char** argv) { return dagnas::cli::run(argc, argv); }
