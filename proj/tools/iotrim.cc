#include <iostream>

#include "iotrim/cli/commands.h"

int main(int argc, char** argv) {
  return iotrim::cli::Run(argc, argv, std::cout, std::cerr);
}
