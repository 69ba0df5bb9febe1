#include "seqtest/cli.hpp"

int main(int argc, char** argv) { return seqtest::run_cli(argc, argv); }
