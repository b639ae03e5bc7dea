#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace overlaysim {

using Digest160 = std::array<uint8_t, 20>;
using Digest256 = std::array<uint8_t, 32>;

Digest160 sha1(std::span<const uint8_t> data);
Digest256 sha256(std::span<const uint8_t> data);

/// HMAC-SHA256 (RFC 2104 construction).
Digest256 hmac_sha256(std::span<const uint8_t> key, std::span<const uint8_t> data);

std::string to_hex(std::span<const uint8_t> bytes);
std::vector<uint8_t> from_hex(std::string_view hex);

inline std::span<const uint8_t> as_bytes(const std::string& s) {
    return {reinterpret_cast<const uint8_t*>(s.data()), s.size()};
}

/// Big-endian integer encoders for canonical byte layouts.
void put_be32(std::vector<uint8_t>& out, uint32_t v);
void put_be64(std::vector<uint8_t>& out, uint64_t v);

}  // namespace overlaysim
