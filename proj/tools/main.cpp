#include "cfnn/cli.hpp"

int main(int argc, char** argv) {
  return cfnn::dispatch(argc, argv);
}
