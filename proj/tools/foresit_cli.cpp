#include "foresit/cli/commands.hpp"

int main(int argc, char** argv) { return foresit::cli::run_cli(argc, argv); }
