#include "introspect/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>

namespace introspect::digest {

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> raw{};
  unsigned int raw_len = 0;
  EVP_Digest(data.data(), data.size(), raw.data(), &raw_len, EVP_sha256(), nullptr);
  std::string hex;
  hex.reserve(raw_len * 2);
  for (unsigned int i = 0; i < raw_len; ++i) {
    char buf[3];
    std::snprintf(buf, sizeof(buf), "%02x", raw[i]);
    hex.append(buf, 2);
  }
  return hex;
}

}  // namespace introspect::digest
