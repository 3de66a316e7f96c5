#include "cli.hpp"

int main(int argc, char** argv) { return bookrel::cli::dispatch(argc, argv); }
