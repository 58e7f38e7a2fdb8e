#include "dirrisk/cli.hpp"

int main(int argc, char** argv) { return dirrisk::run_cli(argc, argv); }
