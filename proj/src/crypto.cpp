#include <pop/crypto.hpp>
#include <pop/error.hpp>

#include <sodium.h>

#include <algorithm>
#include <mutex>
#include <set>

namespace pop::crypto {

void ensure_initialized() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
    });
}

namespace {

struct sodium_guard {
    sodium_guard() { ensure_initialized(); }
};
const sodium_guard init_at_load;

// Tag bytes keep the three transcript outputs on disjoint hash inputs.
constexpr std::uint8_t tag_wide_lo = 0x00;
constexpr std::uint8_t tag_wide_hi = 0x01;
constexpr std::uint8_t tag_digest = 0x02;

digest32 sha256_parts(std::span<const std::uint8_t> a, std::uint8_t tag, std::span<const std::uint8_t> b) {
    crypto_hash_sha256_state st;
    crypto_hash_sha256_init(&st);
    crypto_hash_sha256_update(&st, a.data(), a.size());
    crypto_hash_sha256_update(&st, &tag, 1);
    crypto_hash_sha256_update(&st, b.data(), b.size());
    digest32 out{};
    crypto_hash_sha256_final(&st, out.data());
    return out;
}

}  // namespace

// ---- scalar ----------------------------------------------------------------

scalar scalar::from_wide(std::span<const std::uint8_t, 64> wide) {
    scalar s;
    crypto_core_ristretto255_scalar_reduce(s.bytes_.data(), wide.data());
    return s;
}

std::optional<scalar> scalar::from_canonical(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != scalar_size) return std::nullopt;
    std::array<std::uint8_t, 64> wide{};
    std::copy(bytes.begin(), bytes.end(), wide.begin());
    scalar s = from_wide(wide);
    if (!std::equal(bytes.begin(), bytes.end(), s.bytes_.begin())) return std::nullopt;
    return s;
}

std::optional<scalar> scalar::from_hex(std::string_view hex) {
    auto raw = pop::from_hex(hex);
    if (!raw) return std::nullopt;
    return from_canonical(*raw);
}

bool scalar::is_zero() const noexcept {
    return sodium_is_zero(bytes_.data(), bytes_.size()) == 1;
}

scalar operator+(const scalar& a, const scalar& b) {
    scalar r;
    crypto_core_ristretto255_scalar_add(r.bytes_.data(), a.bytes_.data(), b.bytes_.data());
    return r;
}

scalar operator-(const scalar& a, const scalar& b) {
    scalar r;
    crypto_core_ristretto255_scalar_sub(r.bytes_.data(), a.bytes_.data(), b.bytes_.data());
    return r;
}

scalar operator*(const scalar& a, const scalar& b) {
    scalar r;
    crypto_core_ristretto255_scalar_mul(r.bytes_.data(), a.bytes_.data(), b.bytes_.data());
    return r;
}

bool operator==(const scalar& a, const scalar& b) noexcept {
    return sodium_memcmp(a.bytes_.data(), b.bytes_.data(), scalar_size) == 0;
}

// ---- group element ---------------------------------------------------------

std::optional<group_element> group_element::decode(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != element_size) return std::nullopt;
    if (crypto_core_ristretto255_is_valid_point(bytes.data()) != 1) return std::nullopt;
    group_element e;
    std::copy(bytes.begin(), bytes.end(), e.bytes_.begin());
    if (e.is_identity()) return std::nullopt;
    return e;
}

std::optional<group_element> group_element::from_hex(std::string_view hex) {
    auto raw = pop::from_hex(hex);
    if (!raw) return std::nullopt;
    return decode(*raw);
}

group_element group_element::generator() {
    scalar one;
    std::array<std::uint8_t, 64> wide{};
    wide[0] = 1;
    one = scalar::from_wide(wide);
    return base_mul(one);
}

bool group_element::is_identity() const noexcept {
    return sodium_is_zero(bytes_.data(), bytes_.size()) == 1;
}

group_element operator+(const group_element& a, const group_element& b) {
    group_element r;
    if (crypto_core_ristretto255_add(r.bytes_.data(), a.bytes_.data(), b.bytes_.data()) != 0) {
        throw std::logic_error("ristretto255 addition on invalid encoding");
    }
    return r;
}

group_element operator*(const scalar& k, const group_element& p) {
    group_element r;
    if (p.is_identity() || k.is_zero()) return r;
    // A -1 return means the product is the identity, which is all-zero bytes.
    if (crypto_scalarmult_ristretto255(r.bytes_.data(), k.bytes().data(), p.bytes_.data()) != 0) {
        return group_element{};
    }
    return r;
}

group_element base_mul(const scalar& k) {
    std::array<std::uint8_t, element_size> out{};
    if (k.is_zero() || crypto_scalarmult_ristretto255_base(out.data(), k.bytes().data()) != 0) {
        return group_element{};
    }
    return *group_element::decode(out);
}

// ---- hashing ---------------------------------------------------------------

transcript::transcript(std::string_view domain) : domain_(domain) {}

transcript& transcript::append(std::span<const std::uint8_t> part) {
    append_length_prefixed(body_, part);
    return *this;
}

transcript& transcript::append(std::string_view part) {
    return append(std::span(reinterpret_cast<const std::uint8_t*>(part.data()), part.size()));
}

transcript& transcript::append_u64(std::uint64_t value) {
    byte_vector tmp;
    append_u64_be(tmp, value);
    return append(tmp);
}

namespace {

byte_vector domain_prefix(std::string_view domain) {
    byte_vector out;
    append_length_prefixed(out, std::span(reinterpret_cast<const std::uint8_t*>(domain.data()), domain.size()));
    return out;
}

}  // namespace

digest32 transcript::digest() const {
    return sha256_parts(domain_prefix(domain_), tag_digest, body_);
}

std::array<std::uint8_t, 64> transcript::wide() const {
    const byte_vector prefix = domain_prefix(domain_);
    const digest32 lo = sha256_parts(prefix, tag_wide_lo, body_);
    const digest32 hi = sha256_parts(prefix, tag_wide_hi, body_);
    std::array<std::uint8_t, 64> out{};
    std::copy(lo.begin(), lo.end(), out.begin());
    std::copy(hi.begin(), hi.end(), out.begin() + 32);
    return out;
}

scalar transcript::challenge() const {
    return scalar::from_wide(wide());
}

group_element transcript::to_group() const {
    const auto w = wide();
    std::array<std::uint8_t, element_size> out{};
    crypto_core_ristretto255_from_hash(out.data(), w.data());
    auto decoded = group_element::decode(out);
    // The one-way map hits the identity with negligible probability.
    if (!decoded) throw std::logic_error("hash_to_group produced the identity");
    return *decoded;
}

digest32 sha256(std::span<const std::uint8_t> data) {
    digest32 out{};
    crypto_hash_sha256(out.data(), data.data(), data.size());
    return out;
}

digest32 prf(std::span<const std::uint8_t, 32> key, std::span<const std::uint8_t> data) {
    crypto_auth_hmacsha256_state st;
    crypto_auth_hmacsha256_init(&st, key.data(), key.size());
    crypto_auth_hmacsha256_update(&st, data.data(), data.size());
    digest32 out{};
    crypto_auth_hmacsha256_final(&st, out.data());
    return out;
}

group_element hash_to_group(std::string_view domain, std::span<const std::uint8_t> data) {
    return transcript(domain).append(data).to_group();
}

scalar hash_to_scalar(std::string_view domain, std::span<const std::uint8_t> data) {
    return transcript(domain).append(data).challenge();
}

// ---- keys ------------------------------------------------------------------

person_key_pair keygen(const seed32& seed) {
    for (std::uint64_t counter = 0;; ++counter) {
        scalar secret = transcript("pop/keygen").append(seed).append_u64(counter).challenge();
        if (!secret.is_zero()) return {secret, base_mul(secret)};
    }
}

group_element public_from_secret(const scalar& secret) {
    return base_mul(secret);
}

byte_vector make_scope(std::string_view label, std::initializer_list<std::span<const std::uint8_t>> context) {
    byte_vector out;
    append_length_prefixed(out, std::span(reinterpret_cast<const std::uint8_t*>(label.data()), label.size()));
    for (auto part : context) append_length_prefixed(out, part);
    return out;
}

byte_vector make_scope(std::string_view label, std::initializer_list<std::string_view> context) {
    byte_vector out;
    append_length_prefixed(out, std::span(reinterpret_cast<const std::uint8_t*>(label.data()), label.size()));
    for (auto part : context) {
        append_length_prefixed(out, std::span(reinterpret_cast<const std::uint8_t*>(part.data()), part.size()));
    }
    return out;
}

// ---- linkable ring signature -----------------------------------------------

namespace {

group_element scope_base(std::span<const std::uint8_t> scope) {
    return hash_to_group("pop/lrs/scope-base", scope);
}

bool ring_well_formed(std::span<const group_element> ring) {
    if (ring.empty()) return false;
    std::set<group_element> seen;
    for (const auto& p : ring) {
        if (p.is_identity() || !seen.insert(p).second) return false;
    }
    return true;
}

digest32 signing_context(std::span<const group_element> ring,
                         std::span<const std::uint8_t> scope,
                         const group_element& tag,
                         const digest32& message_digest) {
    transcript t("pop/lrs/context");
    t.append_u64(ring.size());
    for (const auto& p : ring) t.append(p);
    t.append(scope).append(tag).append(message_digest);
    return t.digest();
}

scalar chain_challenge(const digest32& context, std::size_t slot, const group_element& l, const group_element& r) {
    return transcript("pop/lrs/challenge").append(context).append_u64(slot).append(l).append(r).challenge();
}

}  // namespace

group_element linkage_tag(const scalar& secret, std::span<const std::uint8_t> scope) {
    return secret * scope_base(scope);
}

linkable_signature lrs_sign(const scalar& secret,
                            std::span<const group_element> ring,
                            std::span<const std::uint8_t> scope,
                            std::span<const std::uint8_t> message) {
    if (!ring_well_formed(ring)) {
        throw pop_error(errc::ring_invalid, "ring must be nonempty with distinct non-identity entries");
    }
    const group_element signer_public = base_mul(secret);
    const auto it = std::find(ring.begin(), ring.end(), signer_public);
    if (it == ring.end()) throw pop_error(errc::signer_not_in_ring, "signer public element not in ring");

    const std::size_t n = ring.size();
    const auto signer = static_cast<std::size_t>(it - ring.begin());
    const group_element base = scope_base(scope);

    linkable_signature sig;
    sig.scope.assign(scope.begin(), scope.end());
    sig.tag = secret * base;
    sig.ring.assign(ring.begin(), ring.end());
    sig.message_digest = sha256(message);
    sig.challenges.resize(n);
    sig.responses.resize(n);

    const digest32 context = signing_context(ring, scope, sig.tag, sig.message_digest);
    auto nonce = [&](std::uint64_t index) {
        return transcript("pop/lrs/nonce").append(secret).append(context).append_u64(index).challenge();
    };

    const scalar alpha = nonce(0);
    sig.challenges[(signer + 1) % n] = chain_challenge(context, signer, base_mul(alpha), alpha * base);
    for (std::size_t step = 1; step < n; ++step) {
        const std::size_t i = (signer + step) % n;
        sig.responses[i] = nonce(i + 1);
        const group_element l = base_mul(sig.responses[i]) + sig.challenges[i] * ring[i];
        const group_element r = sig.responses[i] * base + sig.challenges[i] * sig.tag;
        sig.challenges[(i + 1) % n] = chain_challenge(context, i, l, r);
    }
    sig.responses[signer] = alpha - sig.challenges[signer] * secret;
    return sig;
}

bool lrs_verify(std::span<const group_element> ring,
                std::span<const std::uint8_t> scope,
                std::span<const std::uint8_t> message,
                const linkable_signature& sig) {
    const std::size_t n = ring.size();
    if (!ring_well_formed(ring)) return false;
    if (sig.ring.size() != n || !std::equal(ring.begin(), ring.end(), sig.ring.begin())) return false;
    if (sig.challenges.size() != n || sig.responses.size() != n) return false;
    if (!std::equal(scope.begin(), scope.end(), sig.scope.begin(), sig.scope.end())) return false;
    if (sig.tag.is_identity()) return false;
    if (sha256(message) != sig.message_digest) return false;

    const group_element base = scope_base(scope);
    const digest32 context = signing_context(ring, scope, sig.tag, sig.message_digest);
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
        const group_element l = base_mul(sig.responses[i]) + sig.challenges[i] * ring[i];
        const group_element r = sig.responses[i] * base + sig.challenges[i] * sig.tag;
        ok &= (chain_challenge(context, i, l, r) == sig.challenges[(i + 1) % n]);
    }
    return ok;
}

// ---- commitments -----------------------------------------------------------

commitment commit(std::span<const std::uint8_t> value, const seed32& nonce) {
    return {transcript("pop/commit").append(value).append(nonce).digest()};
}

bool open_verify(const commitment& c, std::span<const std::uint8_t> value, const seed32& nonce) {
    const commitment again = commit(value, nonce);
    return sodium_memcmp(again.value_digest.data(), c.value_digest.data(), c.value_digest.size()) == 0;
}

// ---- cosignatures ----------------------------------------------------------

namespace {

scalar cosign_challenge(const group_element& witness, const group_element& nonce_point, const digest32& list_digest) {
    return transcript("pop/cosign/challenge").append(witness).append(nonce_point).append(list_digest).challenge();
}

}  // namespace

cosignature cosign(const scalar& witness_secret, const digest32& list_digest) {
    cosignature sig;
    sig.witness_public = base_mul(witness_secret);
    sig.list_digest = list_digest;
    const scalar k = transcript("pop/cosign/nonce").append(witness_secret).append(list_digest).challenge();
    sig.nonce_point = base_mul(k);
    sig.response = k + cosign_challenge(sig.witness_public, sig.nonce_point, list_digest) * witness_secret;
    return sig;
}

bool cosign_verify(const cosignature& cosig, const digest32& list_digest) {
    if (cosig.list_digest != list_digest) return false;
    if (cosig.witness_public.is_identity() || cosig.nonce_point.is_identity()) return false;
    const scalar c = cosign_challenge(cosig.witness_public, cosig.nonce_point, list_digest);
    return base_mul(cosig.response) == cosig.nonce_point + c * cosig.witness_public;
}

}  // namespace pop::crypto
