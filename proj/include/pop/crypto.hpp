#pragma once

// Group primitives over ristretto255 (prime order 2^252 + 27742317777372353535851937790883648493).
//
// Hash:          SHA-256, always over a domain label plus length-prefixed parts.
// Keyed PRF:     HMAC-SHA-256.
// Hash-to-group: the 64-byte expansion SHA-256(label || 0x00 || m) || SHA-256(label || 0x01 || m)
//                mapped with the ristretto255 one-way map (crypto_core_ristretto255_from_hash).
// Hash-to-scalar: the same 64-byte expansion reduced modulo the group order.

#include <pop/bytes.hpp>

#include <array>
#include <compare>
#include <initializer_list>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pop::crypto {

inline constexpr std::size_t element_size = 32;
inline constexpr std::size_t scalar_size = 32;

// Make sure libsodium is initialised. Safe to call from any thread, any number of times.
void ensure_initialized();

class scalar {
public:
    scalar() = default;  // zero

    static scalar from_wide(std::span<const std::uint8_t, 64> wide);
    // Rejects encodings >= group order.
    static std::optional<scalar> from_canonical(std::span<const std::uint8_t> bytes);
    static std::optional<scalar> from_hex(std::string_view hex);

    bool is_zero() const noexcept;
    const std::array<std::uint8_t, scalar_size>& bytes() const noexcept { return bytes_; }
    std::string to_hex() const { return pop::to_hex(bytes_); }

    friend scalar operator+(const scalar& a, const scalar& b);
    friend scalar operator-(const scalar& a, const scalar& b);
    friend scalar operator*(const scalar& a, const scalar& b);
    friend bool operator==(const scalar& a, const scalar& b) noexcept;

private:
    std::array<std::uint8_t, scalar_size> bytes_{};
};

class group_element {
public:
    group_element() = default;  // identity

    // Canonical, on-group, non-identity encodings only.
    static std::optional<group_element> decode(std::span<const std::uint8_t> bytes);
    static std::optional<group_element> from_hex(std::string_view hex);
    static group_element generator();

    bool is_identity() const noexcept;
    const std::array<std::uint8_t, element_size>& bytes() const noexcept { return bytes_; }
    std::string to_hex() const { return pop::to_hex(bytes_); }

    friend group_element operator+(const group_element& a, const group_element& b);
    friend group_element operator*(const scalar& k, const group_element& p);
    friend auto operator<=>(const group_element&, const group_element&) = default;

private:
    std::array<std::uint8_t, element_size> bytes_{};
};

group_element base_mul(const scalar& k);

// Incremental SHA-256 over a domain label and length-prefixed parts.
class transcript {
public:
    explicit transcript(std::string_view domain);

    transcript& append(std::span<const std::uint8_t> part);
    transcript& append(std::string_view part);
    transcript& append(const group_element& element) { return append(element.bytes()); }
    transcript& append(const scalar& s) { return append(s.bytes()); }
    transcript& append_u64(std::uint64_t value);

    digest32 digest() const;
    // 64 bytes of output for the one-way map / wide reduction.
    std::array<std::uint8_t, 64> wide() const;
    scalar challenge() const;
    group_element to_group() const;

private:
    std::string domain_;
    byte_vector body_;
};

digest32 sha256(std::span<const std::uint8_t> data);
digest32 prf(std::span<const std::uint8_t, 32> key, std::span<const std::uint8_t> data);
group_element hash_to_group(std::string_view domain, std::span<const std::uint8_t> data);
scalar hash_to_scalar(std::string_view domain, std::span<const std::uint8_t> data);

struct person_key_pair {
    scalar secret;
    group_element public_element;
};

person_key_pair keygen(const seed32& seed);
group_element public_from_secret(const scalar& secret);

// Domain-separated scope: length-prefixed label followed by length-prefixed context parts.
byte_vector make_scope(std::string_view label, std::initializer_list<std::span<const std::uint8_t>> context);
byte_vector make_scope(std::string_view label, std::initializer_list<std::string_view> context);

// Per-scope linkage tag: hash_to_group(scope)^secret.
group_element linkage_tag(const scalar& secret, std::span<const std::uint8_t> scope);

struct linkable_signature {
    byte_vector scope;
    group_element tag;
    std::vector<group_element> ring;
    std::vector<scalar> challenges;  // one per ring slot
    std::vector<scalar> responses;   // one per ring slot
    digest32 message_digest{};
};

// Throws pop_error(signer_not_in_ring) when the signer's public element is
// absent, pop_error(ring_invalid) for an empty ring or repeated entries.
// Nonces derive from the secret and the signed context, so signing is deterministic.
linkable_signature lrs_sign(const scalar& secret,
                            std::span<const group_element> ring,
                            std::span<const std::uint8_t> scope,
                            std::span<const std::uint8_t> message);

bool lrs_verify(std::span<const group_element> ring,
                std::span<const std::uint8_t> scope,
                std::span<const std::uint8_t> message,
                const linkable_signature& sig);

struct commitment {
    digest32 value_digest{};
    friend bool operator==(const commitment&, const commitment&) = default;
};

commitment commit(std::span<const std::uint8_t> value, const seed32& nonce);
bool open_verify(const commitment& c, std::span<const std::uint8_t> value, const seed32& nonce);

// Schnorr signature of knowledge of the witness secret over a list digest.
struct cosignature {
    group_element witness_public;
    digest32 list_digest{};
    group_element nonce_point;
    scalar response;
};

cosignature cosign(const scalar& witness_secret, const digest32& list_digest);
bool cosign_verify(const cosignature& cosig, const digest32& list_digest);

}  // namespace pop::crypto
