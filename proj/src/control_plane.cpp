#include "overlaysim/control_plane.hpp"

#include <algorithm>

#include "overlaysim/errors.hpp"
#include "overlaysim/rng.hpp"

namespace overlaysim {
namespace {

void put_field(std::vector<uint8_t>& out, std::span<const uint8_t> bytes) {
    put_be32(out, static_cast<uint32_t>(bytes.size()));
    out.insert(out.end(), bytes.begin(), bytes.end());
}

class Reader {
public:
    explicit Reader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

    uint32_t u32() {
        auto b = take(4);
        return (uint32_t{b[0]} << 24) | (uint32_t{b[1]} << 16) | (uint32_t{b[2]} << 8) | b[3];
    }
    uint64_t u64() { return (uint64_t{u32()} << 32) | u32(); }
    std::span<const uint8_t> field() { return take(u32()); }
    bool done() const { return pos_ == bytes_.size(); }

private:
    std::span<const uint8_t> take(size_t n) {
        if (bytes_.size() - pos_ < n) throw IoError("token truncated");
        auto out = bytes_.subspan(pos_, n);
        pos_ += n;
        return out;
    }
    std::span<const uint8_t> bytes_;
    size_t pos_ = 0;
};

}  // namespace

std::vector<Cell> to_cells(const Message& msg, const NodeId& next_hop) {
    size_t count = std::max<size_t>(1, (msg.body.size() + kCellSize - 1) / kCellSize);
    std::vector<Cell> cells(count);
    for (size_t i = 0; i < count; ++i) {
        cells[i].hop_hint = next_hop;
        size_t begin = i * kCellSize;
        size_t len = std::min(kCellSize, msg.body.size() > begin ? msg.body.size() - begin : 0);
        std::copy_n(msg.body.begin() + static_cast<ptrdiff_t>(begin), len, cells[i].payload.begin());
    }
    return cells;
}

RelayObservation relay_view(const Cell& cell) {
    return RelayObservation{cell.payload.size(), cell.hop_hint};
}

DeliveryReport propagate(const OverlayGraph& g, const Message& msg, const NodeId& start,
                         uint32_t ttl) {
    return propagate(g, msg, start, ttl, {});
}

DeliveryReport propagate(const OverlayGraph& g, const Message& msg, const NodeId& start,
                         uint32_t ttl, const std::set<NodeId>& silent) {
    (void)msg;  // delivery is payload-independent by the fixed-size contract
    if (ttl < 1) throw ParameterError("propagate needs ttl >= 1");
    if (!g.contains(start)) throw NotFoundError("no alive node " + start.to_string());

    DeliveryReport report;
    report.reached.insert(start);
    report.hops.emplace(start, 0);
    std::vector<NodeId> frontier{start};
    for (uint32_t round = 1; round <= ttl && !frontier.empty(); ++round) {
        std::vector<NodeId> next;
        for (const NodeId& u : frontier) {
            if (silent.count(u) && !(u == start)) continue;
            for (const NodeId& w : g.peers(u)) {
                if (report.hops.count(w)) continue;
                report.hops.emplace(w, round);
                report.reached.insert(w);
                next.push_back(w);
            }
        }
        if (next.empty()) break;
        ++report.steps;
        frontier = std::move(next);
    }
    return report;
}

// -- rental tokens ---------------------------------------------------------

KeyedHashScheme KeyedHashScheme::from_seed(uint64_t seed) {
    Rng rng(seed);
    std::array<uint8_t, 32> key{};
    for (size_t i = 0; i < key.size(); i += 8) {
        uint64_t w = rng.next();
        for (size_t b = 0; b < 8; ++b) key[i + b] = static_cast<uint8_t>(w >> (56 - 8 * b));
    }
    return KeyedHashScheme(key);
}

std::vector<uint8_t> KeyedHashScheme::sign(std::span<const uint8_t> message) const {
    Digest256 mac = hmac_sha256(std::span<const uint8_t>(key_.data(), key_.size()), message);
    return std::vector<uint8_t>(mac.begin(), mac.end());
}

bool KeyedHashScheme::verify(std::span<const uint8_t> message,
                             std::span<const uint8_t> signature) const {
    auto expect = sign(message);
    return signature.size() == expect.size() &&
           std::equal(signature.begin(), signature.end(), expect.begin());
}

Digest160 KeyedHashScheme::key_digest() const {
    return sha1(std::span<const uint8_t>(key_.data(), key_.size()));
}

std::vector<uint8_t> RentalToken::signed_payload() const {
    std::vector<uint8_t> out;
    put_field(out, std::span<const uint8_t>(renter_key_digest.data(), renter_key_digest.size()));
    std::vector<uint8_t> expiry_bytes;
    put_be64(expiry_bytes, expiry);
    put_field(out, expiry_bytes);
    std::vector<uint8_t> wl;
    put_be32(wl, static_cast<uint32_t>(whitelist.size()));
    for (const auto& name : whitelist) put_field(wl, as_bytes(name));
    put_field(out, wl);
    return out;
}

std::vector<uint8_t> RentalToken::serialize() const {
    std::vector<uint8_t> out = signed_payload();
    put_field(out, signature);
    return out;
}

RentalToken RentalToken::deserialize(std::span<const uint8_t> bytes) {
    Reader r(bytes);
    RentalToken token;
    auto digest = r.field();
    if (digest.size() != token.renter_key_digest.size())
        throw IoError("token renter digest must be 20 bytes");
    std::copy(digest.begin(), digest.end(), token.renter_key_digest.begin());
    auto expiry_bytes = r.field();
    if (expiry_bytes.size() != 8) throw IoError("token expiry must be 8 bytes");
    token.expiry = Reader(expiry_bytes).u64();
    auto wl = r.field();
    Reader wr(wl);
    uint32_t count = wr.u32();
    for (uint32_t i = 0; i < count; ++i) {
        auto name = wr.field();
        token.whitelist.emplace_back(name.begin(), name.end());
    }
    if (!wr.done()) throw IoError("token whitelist has trailing bytes");
    if (!std::is_sorted(token.whitelist.begin(), token.whitelist.end()) ||
        std::adjacent_find(token.whitelist.begin(), token.whitelist.end()) != token.whitelist.end())
        throw IoError("token whitelist must be sorted and unique");
    auto sig = r.field();
    token.signature.assign(sig.begin(), sig.end());
    if (!r.done()) throw IoError("token has trailing bytes");
    return token;
}

RentalToken issue_token(const SignatureScheme& master, const Digest160& renter_key_digest,
                        uint64_t expiry, std::vector<std::string> whitelist, uint64_t now) {
    if (expiry <= now) throw ParameterError("token expiry must lie after the issuance clock");
    RentalToken token;
    token.renter_key_digest = renter_key_digest;
    token.expiry = expiry;
    std::sort(whitelist.begin(), whitelist.end());
    whitelist.erase(std::unique(whitelist.begin(), whitelist.end()), whitelist.end());
    token.whitelist = std::move(whitelist);
    token.signature = master.sign(token.signed_payload());
    return token;
}

std::string to_string(CommandVerdict v) {
    switch (v) {
        case CommandVerdict::accept: return "accept";
        case CommandVerdict::bad_token_signature: return "bad-token-signature";
        case CommandVerdict::expired: return "expired";
        case CommandVerdict::not_whitelisted: return "not-whitelisted";
        case CommandVerdict::bad_command_signature: return "bad-command-signature";
    }
    return "unknown";
}

std::vector<uint8_t> SignedCommand::signed_payload() const {
    std::vector<uint8_t> out;
    put_field(out, as_bytes(name));
    put_field(out, body);
    return out;
}

CommandVerdict verify_command(const RentalToken& token, const SignedCommand& cmd,
                              const SignatureScheme& master, const SignatureScheme& renter,
                              uint64_t now) {
    if (!master.verify(token.signed_payload(), token.signature))
        return CommandVerdict::bad_token_signature;
    if (now >= token.expiry) return CommandVerdict::expired;
    if (!std::binary_search(token.whitelist.begin(), token.whitelist.end(), cmd.name))
        return CommandVerdict::not_whitelisted;
    if (!renter.verify(cmd.signed_payload(), cmd.signature))
        return CommandVerdict::bad_command_signature;
    return CommandVerdict::accept;
}

}  // namespace overlaysim
