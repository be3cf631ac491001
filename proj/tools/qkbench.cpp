#include "qkonc/bench.hpp"

int main(int argc, char** argv) { return qkonc::cli_main(argc, argv); }
