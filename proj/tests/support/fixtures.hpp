// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "conerf/synthetic.hpp"
#include "conerf/training.hpp"

namespace conerf::testing {

/// Small three-disk (2D) or three-sphere (3D) scene for fast tests.
SyntheticSceneSpec tiny_spec(FieldMode mode, int size = 12, int train_frames = 8, int test_frames = 4);

/// Narrow networks with the full topology.
ModelConfig tiny_model(const Dataset& dataset);

/// Fresh, empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace conerf::testing
