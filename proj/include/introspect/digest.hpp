#pragma once

#include <string>
#include <string_view>

namespace introspect::digest {

/// Hex-encoded SHA-256, used for content-addressed cache keys and config
/// digests.
std::string sha256_hex(std::string_view data);

}  // namespace introspect::digest
