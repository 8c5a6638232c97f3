#include "lipcert/cli.hpp"

int main(int argc, char** argv) { return lipcert::run(argc, argv); }
