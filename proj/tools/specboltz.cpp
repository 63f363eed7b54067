#include <specboltz/cli.hpp>

int main(int argc, char** argv) { return specboltz::cli::cli_main(argc, argv); }
