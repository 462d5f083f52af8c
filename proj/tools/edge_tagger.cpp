#include "edgetag/cli/app.hpp"

int main(int argc, char** argv) { return edgetag::cli::parse_and_dispatch(argc, argv); }
