#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hazguard {

// Hex SHA-256 over the fields, each prefixed with its length as an 8-byte
// big-endian integer, so field boundaries cannot collide.
std::string sha256_hex(std::span<const std::string_view> fields);

std::string base64_encode(std::span<const unsigned char> bytes);

// Key identifying one inference request for transcript storage.
std::string request_digest(std::span<const unsigned char> image_bytes, std::string_view prompt,
                           std::string_view model_name);

}  // namespace hazguard
