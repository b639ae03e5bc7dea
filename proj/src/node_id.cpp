#include "overlaysim/node_id.hpp"

#include "overlaysim/errors.hpp"

namespace overlaysim {

namespace {
constexpr char kAlphabet[] = "abcdefghijklmnopqrstuvwxyz234567";

int alphabet_index(char c) {
    if (c >= 'a' && c <= 'z') return c - 'a';
    if (c >= '2' && c <= '7') return 26 + (c - '2');
    return -1;
}
}  // namespace

std::string base32_encode(const std::array<uint8_t, 10>& bytes) {
    std::string out;
    out.reserve(16);
    // 10 bytes = two 40-bit groups, 8 characters each.
    for (int g = 0; g < 2; ++g) {
        uint64_t acc = 0;
        for (int i = 0; i < 5; ++i) acc = (acc << 8) | bytes[g * 5 + i];
        for (int i = 7; i >= 0; --i) out.push_back(kAlphabet[(acc >> (5 * i)) & 0x1f]);
    }
    return out;
}

std::array<uint8_t, 10> base32_decode(std::string_view s) {
    if (s.size() != 16) throw ParameterError("base-32 id must be 16 characters");
    std::array<uint8_t, 10> bytes{};
    for (int g = 0; g < 2; ++g) {
        uint64_t acc = 0;
        for (int i = 0; i < 8; ++i) {
            int v = alphabet_index(s[g * 8 + i]);
            if (v < 0) throw ParameterError("invalid base-32 character");
            acc = (acc << 5) | static_cast<uint64_t>(v);
        }
        for (int i = 4; i >= 0; --i) {
            bytes[g * 5 + i] = static_cast<uint8_t>(acc & 0xff);
            acc >>= 8;
        }
    }
    return bytes;
}

std::string NodeId::to_string() const { return base32_encode(bytes); }

NodeId NodeId::from_string(std::string_view s) { return NodeId{base32_decode(s)}; }

NodeId NodeId::random(Rng& rng) {
    NodeId id;
    for (auto& b : id.bytes) b = static_cast<uint8_t>(rng.below(256));
    return id;
}

}  // namespace overlaysim
