// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "conerf/training.hpp"

namespace conerf {

// Container layout, little-endian:
//   "CONERFCK" | u32 version | u64 step | u64 fingerprint
//   | str model-config JSON | str train-config JSON | str dataset JSON
//   | u64 optimizer step
//   | u32 blob count | blobs | u64 FNV-1a checksum of everything before it
// str = u64 length + bytes. blob = str name | u8 kind (0 parameter,
// 1 first moment, 2 second moment) | u32 rank | u64 dims[rank] | f64 values.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t hash = 0xcbf29ce484222325ULL);

/// Hash of the model and training configuration.
std::uint64_t config_fingerprint(const ModelConfig& model, const TrainConfig& train);

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace conerf
