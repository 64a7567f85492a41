#include <pop/bytes.hpp>
#include <pop/error.hpp>

namespace pop {

std::string to_hex(std::span<const std::uint8_t> data) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (std::uint8_t b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

namespace {

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

std::optional<byte_vector> from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) return std::nullopt;
    byte_vector out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = hex_value(hex[2 * i]);
        int lo = hex_value(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

void append_u64_be(byte_vector& out, std::uint64_t value) {
    for (int shift = 56; shift >= 0; shift -= 8) {
        out.push_back(static_cast<std::uint8_t>(value >> shift));
    }
}

void append_length_prefixed(byte_vector& out, std::span<const std::uint8_t> data) {
    append_u64_be(out, data.size());
    out.insert(out.end(), data.begin(), data.end());
}

std::string_view to_string(errc code) noexcept {
    switch (code) {
        case errc::signer_not_in_ring: return "SignerNotInRing";
        case errc::ring_invalid: return "RingInvalid";
        case errc::config_invalid: return "ConfigInvalid";
        case errc::entry_after_seal: return "EntryAfterSeal";
        case errc::duplicate_entry: return "DuplicateEntry";
        case errc::seal_too_early: return "SealTooEarly";
        case errc::not_present: return "NotPresent";
        case errc::already_scanned: return "AlreadyScanned";
        case errc::token_reused: return "TokenReused";
        case errc::nothing_scanned: return "NothingScanned";
        case errc::wrong_phase: return "WrongPhase";
        case errc::bad_cosignature: return "BadCosignature";
        case errc::duplicate_witness: return "DuplicateWitness";
        case errc::insufficient_volunteers: return "InsufficientVolunteers";
        case errc::bad_reveal: return "BadReveal";
        case errc::too_early: return "TooEarly";
        case errc::deadline_mismatch: return "DeadlineMismatch";
        case errc::body_duplication: return "BodyDuplication";
        case errc::ticket_reused: return "TicketReused";
        case errc::token_not_in_roll: return "TokenNotInRoll";
        case errc::k_too_large: return "KTooLarge";
        case errc::invalid_scenario: return "InvalidScenario";
        case errc::malformed_input: return "MalformedInput";
    }
    return "Unknown";
}

}  // namespace pop
