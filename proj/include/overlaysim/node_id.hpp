#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

#include "overlaysim/rng.hpp"

namespace overlaysim {

/// 80-bit peer identifier, rendered as a 16-character lowercase base-32
/// string (the onion-address model: the id IS the address).
struct NodeId {
    std::array<uint8_t, 10> bytes{};

    auto operator<=>(const NodeId&) const = default;

    /// 16 lowercase base-32 characters.
    std::string to_string() const;

    /// Parse a 16-character base-32 string. Throws ParameterError on bad
    /// length or alphabet.
    static NodeId from_string(std::string_view s);

    /// Fresh id from a random stream (10 raw bytes).
    static NodeId random(Rng& rng);
};

// base-32 over the lowercase alphabet "a..z234567"; 10 bytes <-> 16 chars.
std::string base32_encode(const std::array<uint8_t, 10>& bytes);
std::array<uint8_t, 10> base32_decode(std::string_view s);

}  // namespace overlaysim

template <>
struct std::hash<overlaysim::NodeId> {
    size_t operator()(const overlaysim::NodeId& id) const noexcept {
        // FNV-1a over the 10 bytes.
        uint64_t h = 1469598103934665603ULL;
        for (uint8_t b : id.bytes) {
            h ^= b;
            h *= 1099511628211ULL;
        }
        return static_cast<size_t>(h);
    }
};
