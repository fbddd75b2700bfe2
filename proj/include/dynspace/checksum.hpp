#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace dynspace {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> bytes);
Digest sha256(std::string_view text);

/// Lowercase hex SHA-256 of a file's contents. Throws Error(Io) if unreadable.
std::string sha256_file(const std::filesystem::path& path);

std::string to_hex(std::span<const std::uint8_t> bytes);

/// First eight digest bytes read as a little-endian integer.
std::uint64_t checksum64(std::span<const std::uint8_t> bytes);

}  // namespace dynspace
