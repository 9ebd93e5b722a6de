#include "qsurf/app.hpp"

int main(int argc, char** argv) { return qsurf::cli_main(argc, argv); }
