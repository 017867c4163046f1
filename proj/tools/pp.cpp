#include "cli.hpp"

int main(int argc, char** argv) { return pp::cli::run(argc, argv); }
