#include "commands.hpp"

int main(int argc, char** argv) { return rsr::cli::main(argc, argv); }
