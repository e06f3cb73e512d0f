#include "afop/cli.hpp"

int main(int argc, char** argv) { return afop::run_cli(argc, argv); }
