#include "lmf/cli.hpp"

int main(int argc, char** argv) { return lmf::run_cli(argc, argv); }
