// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace drbml {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitBackend = 3 };

struct CliEnvironment {
  std::ostream* out = nullptr;  // std::cout when null
  std::ostream* err = nullptr;  // std::cerr when null
  /// Reads environment variables; getenv when empty.
  std::function<std::optional<std::string>(const std::string&)> getenv;
};

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, const CliEnvironment& env = {});
int run_cli(int argc, const char* const* argv);

}  // namespace drbml
