// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace suffixlab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kArtifactFormatVersion = 1;

// Entry point of the `suffixlab` tool. args[0] is the program name.
// Exit codes: 0 success, 1 usage/config error, 2 runtime failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace suffixlab
