#pragma once

// JSON mapping for the crypto value types. Elements, scalars and digests are
// lowercase hex strings; objects dump with sorted keys and no whitespace, so
// the dumped bytes are canonical.

#include <pop/bytes.hpp>
#include <pop/crypto.hpp>

#include <json.hpp>

#include <string>

namespace pop {

using json = nlohmann::json;

inline std::string canonical_dump(const json& j) { return j.dump(); }

// Throws pop_error(malformed_input) with `what` in the message.
const std::string& string_from_json(const json& j, const char* what);
digest32 digest_from_json(const json& j, const char* what);
seed32 seed_from_json(const json& j, const char* what);
byte_vector bytes_from_json(const json& j, const char* what);

// Typed field access that reports a malformed_input pop_error instead of a
// nlohmann exception.
const json& require(const json& j, const char* key);

}  // namespace pop

namespace pop::crypto {

void to_json(json& j, const group_element& e);
void from_json(const json& j, group_element& e);
void to_json(json& j, const scalar& s);
void from_json(const json& j, scalar& s);
void to_json(json& j, const linkable_signature& sig);
void from_json(const json& j, linkable_signature& sig);
void to_json(json& j, const cosignature& c);
void from_json(const json& j, cosignature& c);
void to_json(json& j, const commitment& c);
void from_json(const json& j, commitment& c);

}  // namespace pop::crypto
