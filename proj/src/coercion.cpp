#include <pop/coercion.hpp>
#include <pop/drbg.hpp>
#include <pop/error.hpp>

#include <sodium.h>

#include <algorithm>

namespace pop::coercion {

std::array<std::uint8_t, auth_size> real_mark(const tally_key& key, const crypto::group_element& token_public) {
    byte_vector input = to_bytes("pop/coercion/real-mark");
    input.insert(input.end(), token_public.bytes().begin(), token_public.bytes().end());
    const digest32 full = crypto::prf(key.key, input);
    std::array<std::uint8_t, auth_size> out{};
    std::copy_n(full.begin(), auth_size, out.begin());
    return out;
}

namespace {

printed_token print(const crypto::group_element& e, std::span<const std::uint8_t> auth) {
    return {byte_vector(e.bytes().begin(), e.bytes().end()), byte_vector(auth.begin(), auth.end())};
}

}  // namespace

booth_output kiosk::issue(const std::string& ticket_id, std::size_t k_fakes, const seed32& seed) {
    if (k_fakes < 1) throw pop_error(errc::config_invalid, "a sheet needs at least one fake token");
    {
        std::lock_guard lock(mutex_);
        if (!used_tickets_.insert(ticket_id).second) {
            throw pop_error(errc::ticket_reused, "ticket " + ticket_id + " was already used");
        }
    }

    byte_vector stream_seed(seed.begin(), seed.end());
    stream_seed.insert(stream_seed.end(), ticket_id.begin(), ticket_id.end());
    drbg rng("pop/coercion/kiosk", stream_seed);

    booth_output out;
    out.keys.reserve(k_fakes + 1);
    out.sheet.tokens.reserve(k_fakes + 1);

    const auto real = crypto::keygen(rng.next_seed());
    out.keys.push_back(real);
    out.sheet.tokens.push_back(print(real.public_element, real_mark(key_, real.public_element)));

    for (std::size_t i = 0; i < k_fakes; ++i) {
        const auto fake = crypto::keygen(rng.next_seed());
        std::array<std::uint8_t, auth_size> noise{};
        rng.fill(noise);
        out.keys.push_back(fake);
        out.sheet.tokens.push_back(print(fake.public_element, noise));
    }
    return out;
}

bool public_validate(const printed_token& token) {
    return token.auth.size() == auth_size && crypto::group_element::decode(token.public_encoding).has_value();
}

std::vector<printed_token> filter_real(std::span<const printed_token> tokens, const tally_key& key) {
    std::vector<printed_token> kept;
    for (const auto& t : tokens) {
        if (!public_validate(t)) continue;
        const auto mark = real_mark(key, *crypto::group_element::decode(t.public_encoding));
        if (sodium_memcmp(mark.data(), t.auth.data(), auth_size) == 0) kept.push_back(t);
    }
    return kept;
}

byte_vector delegation_scope(std::uint64_t cycle) {
    byte_vector context;
    append_u64_be(context, cycle);
    return crypto::make_scope("delegation", {std::span<const std::uint8_t>(context)});
}

delegation_record booth_delegate(const crypto::scalar& real_secret,
                                 const ceremony::roll_list& cycle_roll,
                                 const crypto::group_element& delegate_public) {
    const auto mine = crypto::public_from_secret(real_secret);
    if (std::find(cycle_roll.tokens.begin(), cycle_roll.tokens.end(), mine) == cycle_roll.tokens.end()) {
        throw pop_error(errc::token_not_in_roll, "token is not on the cycle roll");
    }
    delegation_record rec;
    rec.cycle = cycle_roll.cycle;
    rec.delegate_public = delegate_public;
    rec.signature = crypto::lrs_sign(real_secret, cycle_roll.tokens, delegation_scope(cycle_roll.cycle),
                                     delegate_public.bytes());
    return rec;
}

bool verify_delegation(const delegation_record& record, const ceremony::roll_list& cycle_roll) {
    if (record.cycle != cycle_roll.cycle) return false;
    return crypto::lrs_verify(cycle_roll.tokens, delegation_scope(cycle_roll.cycle), record.delegate_public.bytes(),
                              record.signature);
}

bool delegation_registry::record(const delegation_record& rec, const ceremony::roll_list& cycle_roll) {
    if (!verify_delegation(rec, cycle_roll)) return false;
    by_tag_[rec.delegator_tag()] = rec.delegate_public;
    return true;
}

std::optional<crypto::group_element> delegation_registry::delegate_of(const crypto::group_element& tag) const {
    auto it = by_tag_.find(tag);
    if (it == by_tag_.end()) return std::nullopt;
    return it->second;
}

void to_json(json& j, const printed_token& t) {
    j = json{{"public", to_hex(t.public_encoding)}, {"auth", to_hex(t.auth)}};
}

void from_json(const json& j, printed_token& t) {
    t.public_encoding = bytes_from_json(require(j, "public"), "public");
    t.auth = bytes_from_json(require(j, "auth"), "auth");
}

void to_json(json& j, const printed_sheet& s) { j = s.tokens; }

void from_json(const json& j, printed_sheet& s) {
    if (!j.is_array()) throw pop_error(errc::malformed_input, "sheet: expected a list of tokens");
    s.tokens.clear();
    for (const auto& t : j) s.tokens.push_back(t.get<printed_token>());
}

void to_json(json& j, const delegation_record& r) {
    j = json{{"cycle", r.cycle}, {"delegate_public", r.delegate_public}, {"signature", r.signature}};
}

void from_json(const json& j, delegation_record& r) {
    try {
        r.cycle = require(j, "cycle").get<std::uint64_t>();
        r.delegate_public = require(j, "delegate_public").get<crypto::group_element>();
        r.signature = require(j, "signature").get<crypto::linkable_signature>();
    } catch (const json::exception& e) {
        throw pop_error(errc::malformed_input, std::string("delegation: ") + e.what());
    }
}

}  // namespace pop::coercion
