#pragma once

#include <string>

namespace idskit {

/// SHA-256 hex digest of a byte string / file. Used for bundle manifests.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

}  // namespace idskit
