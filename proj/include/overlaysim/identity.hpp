#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "overlaysim/hash.hpp"
#include "overlaysim/node_id.hpp"

namespace overlaysim {

/// Hidden-service identity: an 80-bit fingerprint (first 10 bytes of the
/// SHA-1 digest of the service public key) plus its base-32 hostname.
struct ServiceIdentifier {
    std::array<uint8_t, 10> fingerprint{};

    std::string onion_name() const { return base32_encode(fingerprint); }
    NodeId to_node_id() const { return NodeId{fingerprint}; }

    static ServiceIdentifier from_public_key(std::span<const uint8_t> pubkey);
    static ServiceIdentifier from_fingerprint(const std::array<uint8_t, 10>& fp) {
        return ServiceIdentifier{fp};
    }
    static ServiceIdentifier from_onion_name(std::string_view name) {
        return ServiceIdentifier{base32_decode(name)};
    }

    auto operator<=>(const ServiceIdentifier&) const = default;
};

/// Rotating directory-placement digest for one (service, period, replica).
struct DescriptorId {
    Digest160 value{};
    uint8_t replica = 0;  // 0 or 1
    uint64_t period = 0;

    auto operator<=>(const DescriptorId&) const = default;
};

using DescriptorCookie = std::array<uint8_t, 16>;  // optional 128-bit field

/// Directory relays sorted on the fingerprint circle.
class HsdirRing {
public:
    struct Relay {
        Digest160 fingerprint{};
        std::string label;
    };

    /// Sorts relays by fingerprint. Throws ParameterError on duplicate
    /// fingerprints or fewer than 3 relays.
    static HsdirRing from_relays(std::vector<Relay> relays);

    const std::vector<Relay>& relays() const { return relays_; }

private:
    std::vector<Relay> relays_;
};

/// Symmetric key a peer shares with its controller, plus the digest of the
/// controller's public key. Both sides derive the same per-period address
/// from it.
struct SharedBotKey {
    std::array<uint8_t, 32> key{};
    Digest160 master_public_key_digest{};

    static SharedBotKey random(Rng& rng);
};

/// Day index offset by the service's permanent-id byte so descriptors do
/// not all rotate at the same instant. Integer arithmetic, floor division:
/// (current_time + permanent_id_byte * 86400 / 256) / 86400.
uint64_t time_period(uint64_t current_time, uint8_t permanent_id_byte);

/// descriptor-id = SHA1(fingerprint || SHA1(period_be4 || [cookie] || replica)).
/// A missing cookie contributes no bytes.
DescriptorId descriptor_id(const ServiceIdentifier& identifier, uint64_t period,
                           const std::optional<DescriptorCookie>& cookie, uint8_t replica);

/// The 3 consecutive ring relays at or after the descriptor value, with
/// wraparound. An exactly-equal fingerprint is the first of the three.
std::vector<std::string> responsible_hsdirs(const HsdirRing& ring, const DescriptorId& desc);

/// Deterministic per-period identity:
/// fingerprint = SHA1(master_digest || SHA256(key || period_be8))[0..10).
ServiceIdentifier derive_period_key(const SharedBotKey& shared, uint64_t period);

}  // namespace overlaysim
