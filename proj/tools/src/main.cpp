#include "commands.hpp"

int main(int argc, char** argv) { return dirclip::cli::run_cli(argc, argv); }
