#pragma once

// Privacy-booth kiosk: one real token plus k fakes per single-use ticket.
// Real and fake tokens look the same to everyone except the holder of the
// tally key: a real token's auth field is a PRF mark under that key, a fake's
// is uniform noise of the same length.

#include <pop/ceremony.hpp>
#include <pop/crypto.hpp>
#include <pop/json.hpp>

#include <array>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace pop::coercion {

inline constexpr std::size_t auth_size = 16;
inline constexpr std::size_t default_fakes = 3;

// Never serialized into any public artifact.
struct tally_key {
    std::array<std::uint8_t, 32> key{};
};

// Printed form: raw encodings, unvalidated until public_validate.
struct printed_token {
    byte_vector public_encoding;
    byte_vector auth;

    friend bool operator==(const printed_token&, const printed_token&) = default;
};

struct printed_sheet {
    std::vector<printed_token> tokens;  // tokens[0] is the real one; nothing on the sheet says so
};

// What leaves the booth: the sheet plus the key pair behind each printed token.
struct booth_output {
    printed_sheet sheet;
    std::vector<crypto::person_key_pair> keys;
};

std::array<std::uint8_t, auth_size> real_mark(const tally_key& key, const crypto::group_element& token_public);

class kiosk {
public:
    explicit kiosk(tally_key key) : key_(key) {}

    // Throws pop_error(ticket_reused). Ticket consumption is atomic.
    booth_output issue(const std::string& ticket_id, std::size_t k_fakes, const seed32& seed);

private:
    tally_key key_;
    std::mutex mutex_;
    std::set<std::string> used_tickets_;
};

// Structural check only: on-group element and auth of the right length. Never needs the tally key.
bool public_validate(const printed_token& token);

std::vector<printed_token> filter_real(std::span<const printed_token> tokens, const tally_key& key);

byte_vector delegation_scope(std::uint64_t cycle);

struct delegation_record {
    std::uint64_t cycle = 0;
    crypto::group_element delegate_public;
    crypto::linkable_signature signature;  // ring = cycle roll, message = delegate encoding

    const crypto::group_element& delegator_tag() const noexcept { return signature.tag; }
};

// Throws pop_error(token_not_in_roll) when the secret's public is not on the roll.
delegation_record booth_delegate(const crypto::scalar& real_secret,
                                 const ceremony::roll_list& cycle_roll,
                                 const crypto::group_element& delegate_public);

bool verify_delegation(const delegation_record& record, const ceremony::roll_list& cycle_roll);

// One live delegation per linkage tag; a later valid record replaces an earlier one.
class delegation_registry {
public:
    bool record(const delegation_record& rec, const ceremony::roll_list& cycle_roll);
    std::optional<crypto::group_element> delegate_of(const crypto::group_element& tag) const;
    std::size_t size() const noexcept { return by_tag_.size(); }

private:
    std::map<crypto::group_element, crypto::group_element> by_tag_;
};

void to_json(json& j, const printed_token& t);
void from_json(const json& j, printed_token& t);
// Public sheet serialization: list of {public, auth}; the real index is omitted.
void to_json(json& j, const printed_sheet& s);
void from_json(const json& j, printed_sheet& s);
void to_json(json& j, const delegation_record& r);
void from_json(const json& j, delegation_record& r);

}  // namespace pop::coercion
