#include "oai/cli.hpp"

int main(int argc, char** argv) { return oai::cli::run(argc, argv); }
