#pragma once

#include "ifgsim/core/errors.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <string>
#include <vector>

namespace ifgsim::io {

/// Hex SHA-256 digest.
inline std::string sha256_hex(const std::vector<unsigned char>& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw IoError("SHA-256 computation failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

} // namespace ifgsim::io
