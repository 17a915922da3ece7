#include "tvsn/cli/commands.hpp"

int main(int argc, char** argv) { return tvsn::cli::run(argc, argv); }
