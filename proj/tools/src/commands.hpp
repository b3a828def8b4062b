// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

namespace conerf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

inline constexpr const char* kPortVariable = "CONERF_PORT";
inline constexpr int kDefaultPort = 8080;

/// Entry point of the `conerf` tool: generate, train, render, eval, serve.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace conerf::cli
