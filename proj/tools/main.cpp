#include "epifit/cli.hpp"

int main(int argc, char** argv) { return epifit::run_cli(argc, argv); }
