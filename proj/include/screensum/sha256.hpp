#pragma once

#include <string>
#include <string_view>

namespace screensum {

// SHA-256 digest of the given bytes as a lowercase hex string.
std::string sha256_hex(std::string_view bytes);

}  // namespace screensum
