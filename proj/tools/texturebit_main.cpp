#include "texturebit/commands.hpp"

int main(int argc, char** argv) { return texturebit::run_cli(argc, argv); }
