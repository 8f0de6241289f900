#ifndef HOLDOUT_SHA256_HPP
#define HOLDOUT_SHA256_HPP

#include <string>
#include <string_view>

namespace holdout {

/// Lowercase hex SHA-256 digest (64 chars) of the given bytes.
std::string sha256_hex(std::string_view bytes);

}  // namespace holdout

#endif  // HOLDOUT_SHA256_HPP
