#include "cli.hpp"

int main(int argc, char** argv) { return abundance::cli::cli_dispatch(argc, argv); }
