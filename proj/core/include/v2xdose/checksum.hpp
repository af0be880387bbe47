#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace v2xdose {

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string to_hex(std::uint64_t v);
// FNV-1a of the file bytes as 16 hex digits. Throws ParseError if unreadable.
std::string file_checksum(const std::filesystem::path& path);

}  // namespace v2xdose
