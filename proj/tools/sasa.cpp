#include "sasa/cli.hpp"

int main(int argc, char** argv) { return sasa::cli::dispatch(argc, argv); }
