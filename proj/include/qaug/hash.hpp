#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace qaug {

std::string sha1_hex(std::string_view bytes);

/// Git blob id: sha1("blob <len>\0" + bytes).
std::string git_blob_hash(std::string_view bytes);
std::string git_blob_hash(const std::vector<std::uint8_t>& bytes);
std::string git_blob_hash_file(const std::string& path);

}  // namespace qaug
