#include "wgboost/cli.hpp"

int main(int argc, char** argv) { return wgboost::cli::run_cli(argc, argv); }
