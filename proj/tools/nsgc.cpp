#include "nsgc/harness.hpp"

int main(int argc, char** argv) { return nsgc::harness::cli(argc, argv); }
