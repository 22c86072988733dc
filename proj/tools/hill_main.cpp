#include "hill/cli.hpp"

int main(int argc, char** argv) { return hill::run_cli(argc, argv); }
