// Copyright 2026 The HAAN Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "haan/tools/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return haan::tools::run_cli(args, std::cout, std::cerr);
}
