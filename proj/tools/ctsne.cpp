#include <ctsne/cli.hpp>

int main(int argc, char** argv) { return ctsne::cli::dispatch(argc, argv); }
