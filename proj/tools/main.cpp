#include "mfbounds/cli.hpp"

int main(int argc, char** argv) { return mfb::run_cli(argc, argv); }
