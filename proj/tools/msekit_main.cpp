#include "msekit/cli.hpp"

int main(int argc, char** argv) { return msekit::cli::run(argc, argv); }
