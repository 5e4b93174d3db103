#include "loadcast/cli/app.hpp"

int main(int argc, char **argv) { return loadcast::cli::run(argc, argv); }
