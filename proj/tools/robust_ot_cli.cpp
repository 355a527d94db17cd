#include "robust_ot/cli.hpp"

int main(int argc, char** argv) {
  return robust_ot::cli::run_cli(argc, argv);
}
