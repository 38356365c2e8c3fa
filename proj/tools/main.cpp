#include "cli.hpp"

int main(int argc, char** argv) { return exemplar::cli::run(argc, argv); }
