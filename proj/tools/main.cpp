#include "satpose/cli/commands.hpp"

int main(int argc, char** argv) { return satpose::run_cli(argc, argv); }
