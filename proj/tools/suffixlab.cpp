// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "suffixlab/cli.hpp"

int main(int argc, char** argv) {
    return suffixlab::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
