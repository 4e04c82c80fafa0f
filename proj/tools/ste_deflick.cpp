#include "cli/commands.hpp"

int main(int argc, char** argv) { return stedeflick::cli::run(argc, argv); }
