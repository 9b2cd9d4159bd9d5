#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace triform {

// Lowercase hex SHA-256, prefixed "sha256:".
std::string sha256_digest(std::string_view bytes);
std::string sha256_digest(std::span<const float> values);  // little-endian bytes
std::string sha256_file(const std::filesystem::path& path);

}  // namespace triform
