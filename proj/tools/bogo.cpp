#include <bogo/cli.hpp>

int main(int argc, char** argv) { return bogo::cli::run(argc, argv); }
