#include "accgossip/cli.hpp"

int main(int argc, char** argv) { return accgossip::cli::run(argc, argv); }
