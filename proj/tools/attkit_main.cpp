#include "attkit/cli.hpp"

int main(int argc, char** argv) { return attkit::cli_main(argc, argv); }
