#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace recinv::util {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Digest of a vocabulary: SHA-256 of the tokens joined by '\n'.
std::string vocab_digest(std::span<const std::string> vocab);

/// Digest of a double buffer, hashed as little-endian IEEE-754 bytes.
std::string doubles_digest(std::span<const double> values);

}  // namespace recinv::util
