// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

// Little-endian float32 blobs and JSON sidecars shared by the dataset and checkpoint formats.
namespace physmamba::io {

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

/// Appends values as little-endian IEEE-754 float32.
void append_f32_le(std::vector<std::uint8_t>& out, std::span<const double> values);
/// Decodes count float32 values starting at byte offset; raises FormatError(file) if out of range.
std::vector<double> decode_f32_le(std::span<const std::uint8_t> bytes, std::size_t offset, std::size_t count,
                                  const std::string& file);

/// Rounds every value to the nearest float32.
void quantize_f32(std::span<double> values);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

nlohmann::ordered_json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j);

}  // namespace physmamba::io
