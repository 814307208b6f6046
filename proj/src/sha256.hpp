#pragma once

#include <string>

namespace l2t {

// Lowercase hex SHA-256. File variant streams; throws IoError when the path
// cannot be read.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::string& path);

}  // namespace l2t
