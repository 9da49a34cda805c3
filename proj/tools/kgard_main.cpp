#include "cli.hpp"

int main(int argc, char** argv) { return kgard::cli::dispatch(argc, argv); }
