#include "cli/run.hpp"

int main(int argc, char** argv) { return slp::cli::main_entry(argc, argv); }
