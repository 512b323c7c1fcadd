#include "gaitvel/cli.hpp"

int main(int argc, char** argv) { return gaitvel::cli::run(argc, argv); }
