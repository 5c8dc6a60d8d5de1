#include "rpss/cli.hpp"

int main(int argc, char** argv) { return rpss::cli::run(argc, argv); }
