#include "cli.hpp"

int main(int argc, char** argv) { return remove_eval::cli::run_cli(argc, argv); }
