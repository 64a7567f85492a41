#include <pop/error.hpp>
#include <pop/json.hpp>

namespace pop {

const std::string& string_from_json(const json& j, const char* what) {
    if (!j.is_string()) throw pop_error(errc::malformed_input, std::string(what) + ": expected string");
    return j.get_ref<const std::string&>();
}

digest32 digest_from_json(const json& j, const char* what) {
    auto d = fixed_from_hex<32>(string_from_json(j, what));
    if (!d) throw pop_error(errc::malformed_input, std::string(what) + ": expected 32-byte hex");
    return *d;
}

seed32 seed_from_json(const json& j, const char* what) {
    return digest_from_json(j, what);
}

byte_vector bytes_from_json(const json& j, const char* what) {
    auto b = from_hex(string_from_json(j, what));
    if (!b) throw pop_error(errc::malformed_input, std::string(what) + ": invalid hex");
    return *b;
}

const json& require(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        throw pop_error(errc::malformed_input, std::string("missing field '") + key + "'");
    }
    return j.at(key);
}

}  // namespace pop

namespace pop::crypto {

void to_json(json& j, const group_element& e) { j = e.to_hex(); }

void from_json(const json& j, group_element& e) {
    auto decoded = group_element::from_hex(string_from_json(j, "group element"));
    if (!decoded) throw pop_error(errc::malformed_input, "group element: non-canonical or off-group encoding");
    e = *decoded;
}

void to_json(json& j, const scalar& s) { j = s.to_hex(); }

void from_json(const json& j, scalar& s) {
    auto decoded = scalar::from_hex(string_from_json(j, "scalar"));
    if (!decoded) throw pop_error(errc::malformed_input, "scalar: non-canonical encoding");
    s = *decoded;
}

void to_json(json& j, const linkable_signature& sig) {
    j = json{{"scope", to_hex(sig.scope)},
             {"tag", sig.tag},
             {"ring", sig.ring},
             {"challenges", sig.challenges},
             {"responses", sig.responses},
             {"message_digest", to_hex(sig.message_digest)}};
}

void from_json(const json& j, linkable_signature& sig) {
    sig.scope = bytes_from_json(require(j, "scope"), "scope");
    sig.tag = require(j, "tag").get<group_element>();
    sig.ring = require(j, "ring").get<std::vector<group_element>>();
    sig.challenges = require(j, "challenges").get<std::vector<scalar>>();
    sig.responses = require(j, "responses").get<std::vector<scalar>>();
    sig.message_digest = digest_from_json(require(j, "message_digest"), "message_digest");
}

void to_json(json& j, const cosignature& c) {
    j = json{{"witness_public", c.witness_public},
             {"list_digest", to_hex(c.list_digest)},
             {"nonce_point", c.nonce_point},
             {"response", c.response}};
}

void from_json(const json& j, cosignature& c) {
    c.witness_public = require(j, "witness_public").get<group_element>();
    c.list_digest = digest_from_json(require(j, "list_digest"), "list_digest");
    c.nonce_point = require(j, "nonce_point").get<group_element>();
    c.response = require(j, "response").get<scalar>();
}

void to_json(json& j, const commitment& c) { j = to_hex(c.value_digest); }

void from_json(const json& j, commitment& c) { c.value_digest = digest_from_json(j, "commitment"); }

}  // namespace pop::crypto
