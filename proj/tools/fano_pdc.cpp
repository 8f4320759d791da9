#include "fanopdc/cli.hpp"

int main(int argc, char** argv) { return fanopdc::cli::run(argc, argv); }
