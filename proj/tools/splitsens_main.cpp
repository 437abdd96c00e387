#include "splitsens/cli.hpp"

int main(int argc, char** argv) { return splitsens::cli::run(argc, argv); }
