#include "overlaysim/identity.hpp"

#include <algorithm>
#include <cstring>

#include "overlaysim/errors.hpp"

namespace overlaysim {

ServiceIdentifier ServiceIdentifier::from_public_key(std::span<const uint8_t> pubkey) {
    const Digest160 digest = sha1(pubkey);
    ServiceIdentifier id;
    std::memcpy(id.fingerprint.data(), digest.data(), id.fingerprint.size());
    return id;
}

HsdirRing HsdirRing::from_relays(std::vector<Relay> relays) {
    if (relays.size() < 3) throw ParameterError("hsdir ring needs at least 3 relays");
    std::sort(relays.begin(), relays.end(),
              [](const Relay& a, const Relay& b) { return a.fingerprint < b.fingerprint; });
    for (size_t i = 1; i < relays.size(); ++i) {
        if (relays[i - 1].fingerprint == relays[i].fingerprint)
            throw ParameterError("duplicate relay fingerprint in hsdir ring");
    }
    HsdirRing ring;
    ring.relays_ = std::move(relays);
    return ring;
}

SharedBotKey SharedBotKey::random(Rng& rng) {
    SharedBotKey k;
    for (auto& b : k.key) b = static_cast<uint8_t>(rng.below(256));
    for (auto& b : k.master_public_key_digest) b = static_cast<uint8_t>(rng.below(256));
    return k;
}

uint64_t time_period(uint64_t current_time, uint8_t permanent_id_byte) {
    return (current_time + permanent_id_byte * 86400ULL / 256ULL) / 86400ULL;
}

DescriptorId descriptor_id(const ServiceIdentifier& identifier, uint64_t period,
                           const std::optional<DescriptorCookie>& cookie, uint8_t replica) {
    if (replica > 1) throw ParameterError("replica must be 0 or 1");

    // secret-id-part = H(time-period || descriptor-cookie || replica)
    std::vector<uint8_t> secret_input;
    secret_input.reserve(4 + 16 + 1);
    put_be32(secret_input, static_cast<uint32_t>(period));
    if (cookie) secret_input.insert(secret_input.end(), cookie->begin(), cookie->end());
    secret_input.push_back(replica);
    const Digest160 secret_id_part = sha1(secret_input);

    // descriptor-id = H(identifier || secret-id-part)
    std::vector<uint8_t> outer;
    outer.reserve(10 + 20);
    outer.insert(outer.end(), identifier.fingerprint.begin(), identifier.fingerprint.end());
    outer.insert(outer.end(), secret_id_part.begin(), secret_id_part.end());

    DescriptorId desc;
    desc.value = sha1(outer);
    desc.replica = replica;
    desc.period = period;
    return desc;
}

std::vector<std::string> responsible_hsdirs(const HsdirRing& ring, const DescriptorId& desc) {
    const auto& relays = ring.relays();
    if (relays.size() < 3) throw ParameterError("hsdir ring needs at least 3 relays");

    // First relay with fingerprint >= descriptor value, wrapping to 0.
    size_t k = relays.size();
    for (size_t i = 0; i < relays.size(); ++i) {
        if (relays[i].fingerprint >= desc.value) {
            k = i;
            break;
        }
    }
    if (k == relays.size()) k = 0;

    std::vector<std::string> out;
    out.reserve(3);
    for (size_t j = 0; j < 3; ++j) out.push_back(relays[(k + j) % relays.size()].label);
    return out;
}

ServiceIdentifier derive_period_key(const SharedBotKey& shared, uint64_t period) {
    std::vector<uint8_t> inner;
    inner.reserve(32 + 8);
    inner.insert(inner.end(), shared.key.begin(), shared.key.end());
    put_be64(inner, period);
    const Digest256 keyed = sha256(inner);

    std::vector<uint8_t> outer;
    outer.reserve(20 + 32);
    outer.insert(outer.end(), shared.master_public_key_digest.begin(),
                 shared.master_public_key_digest.end());
    outer.insert(outer.end(), keyed.begin(), keyed.end());
    const Digest160 digest = sha1(outer);

    ServiceIdentifier id;
    std::memcpy(id.fingerprint.data(), digest.data(), id.fingerprint.size());
    return id;
}

}  // namespace overlaysim
