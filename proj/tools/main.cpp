#include "cli.hpp"

int main(int argc, char** argv) { return mobility::cli::run(argc, argv); }
