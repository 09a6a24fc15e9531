#include "cli.hpp"

int main(int argc, char** argv) { return wipt::cli::run(argc, argv); }
