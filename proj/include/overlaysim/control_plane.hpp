#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "overlaysim/hash.hpp"
#include "overlaysim/node_id.hpp"
#include "overlaysim/overlay_graph.hpp"

namespace overlaysim {

inline constexpr size_t kCellSize = 512;

enum class MessageKind { broadcast, directed, group, maintenance };

/// Sender-side message. Kind, targets, and origin are bookkeeping the
/// sender keeps; none of it is encoded into cells.
struct Message {
    MessageKind kind = MessageKind::broadcast;
    std::vector<NodeId> targets;  // directed only
    uint64_t group_key_id = 0;    // group only; key distribution is out of band
    std::vector<uint8_t> body;
    NodeId origin{};
};

/// Fixed-size transport unit. The payload is opaque padded bytes; the only
/// routing state is the next hop.
struct Cell {
    std::array<uint8_t, kCellSize> payload{};
    NodeId hop_hint{};
};

/// Everything a relay can observe about a cell.
struct RelayObservation {
    size_t size = 0;
    NodeId hop_hint{};
    bool operator==(const RelayObservation&) const = default;
};

/// Chop a message body into whole zero-padded cells (at least one, even
/// for an empty body), all addressed to the same next hop.
std::vector<Cell> to_cells(const Message& msg, const NodeId& next_hop);

RelayObservation relay_view(const Cell& cell);

struct DeliveryReport {
    std::set<NodeId> reached;
    std::map<NodeId, uint32_t> hops;  // BFS distance from start
    uint64_t steps = 0;               // rounds that informed someone new
};

/// Synchronous-round flood from start: every informed node forwards to all
/// peers once; stops after ttl rounds or when a round informs nobody new.
/// Throws NotFoundError for a dead start, ParameterError for ttl = 0.
DeliveryReport propagate(const OverlayGraph& g, const Message& msg, const NodeId& start,
                         uint32_t ttl);

/// Same flood, but nodes in `silent` receive without ever forwarding
/// (models attacker clones dropping traffic).
DeliveryReport propagate(const OverlayGraph& g, const Message& msg, const NodeId& start,
                         uint32_t ttl, const std::set<NodeId>& silent);

// -- rental tokens ---------------------------------------------------------

/// Deterministic signer/verifier pair behind one interface; production
/// could back this with a real asymmetric scheme, tests use a keyed hash.
class SignatureScheme {
public:
    virtual ~SignatureScheme() = default;
    virtual std::vector<uint8_t> sign(std::span<const uint8_t> message) const = 0;
    virtual bool verify(std::span<const uint8_t> message, std::span<const uint8_t> signature) const = 0;
};

/// HMAC-SHA256 under a shared key.
class KeyedHashScheme final : public SignatureScheme {
public:
    explicit KeyedHashScheme(std::array<uint8_t, 32> key) : key_(key) {}
    static KeyedHashScheme from_seed(uint64_t seed);

    std::vector<uint8_t> sign(std::span<const uint8_t> message) const override;
    bool verify(std::span<const uint8_t> message, std::span<const uint8_t> signature) const override;
    /// SHA-1 of the key bytes; doubles as the renter key digest in tokens.
    Digest160 key_digest() const;

private:
    std::array<uint8_t, 32> key_;
};

/// Time-boxed, command-scoped delegation of control.
/// Wire format (docs/formats.md): length-prefixed fields in declaration
/// order; the signature covers the first three fields' encoding.
struct RentalToken {
    Digest160 renter_key_digest{};
    uint64_t expiry = 0;                 // seconds since epoch
    std::vector<std::string> whitelist;  // sorted, unique
    std::vector<uint8_t> signature;

    std::vector<uint8_t> signed_payload() const;
    std::vector<uint8_t> serialize() const;
    /// Strict parse: rejects truncation, oversized lengths, trailing bytes.
    static RentalToken deserialize(std::span<const uint8_t> bytes);
};

/// Sign a token under the master key. The issuance clock is the caller's
/// (nothing here reads wall time); expiry must lie strictly after now.
RentalToken issue_token(const SignatureScheme& master, const Digest160& renter_key_digest,
                        uint64_t expiry, std::vector<std::string> whitelist, uint64_t now);

enum class CommandVerdict {
    accept,
    bad_token_signature,
    expired,
    not_whitelisted,
    bad_command_signature,
};

std::string to_string(CommandVerdict v);

struct SignedCommand {
    std::string name;
    std::vector<uint8_t> body;
    std::vector<uint8_t> signature;  // renter's, over the command encoding

    std::vector<uint8_t> signed_payload() const;
};

/// Conjuncts checked in order: token signature, expiry, whitelist, command
/// signature; the first failure names the verdict.
CommandVerdict verify_command(const RentalToken& token, const SignedCommand& cmd,
                              const SignatureScheme& master, const SignatureScheme& renter,
                              uint64_t now);

}  // namespace overlaysim
