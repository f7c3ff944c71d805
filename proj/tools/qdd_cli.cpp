#include "qdd/cli.hpp"

int main(int argc, char** argv) { return qdd::cli_main(argc, argv); }
