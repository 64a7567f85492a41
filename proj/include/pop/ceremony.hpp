#pragma once

// Pseudonym-party event state machine.
//
// An event moves LobbyOpen -> Sealed -> Scanning -> Published -> Finalized and
// never backwards. Attendee ids live only in the in-memory state and the
// ground-truth log; the published roll list carries tokens, digests and
// cosignatures only.

#include <pop/bytes.hpp>
#include <pop/crypto.hpp>
#include <pop/json.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace pop::ceremony {

using tick = std::int64_t;
using crypto::group_element;

enum class size_tier { small, medium, large };

inline constexpr double default_cosign_threshold = 0.2;
inline constexpr std::size_t default_min_witnesses = 3;

struct event_config {
    std::string event_id;
    std::string site_id;
    std::uint64_t cycle = 0;
    tick opening = 0;
    tick deadline = 1;
    double cosign_threshold = default_cosign_threshold;
    std::size_t min_witnesses = default_min_witnesses;
    size_tier tier = size_tier::small;
};

// Throws pop_error(config_invalid).
void validate(const event_config& config);

enum class phase { lobby_open, sealed, scanning, published, finalized };

std::string_view to_string(phase p) noexcept;

enum class finding_code { inflation_detected, duplicate_scan, cosign_shortfall, entry_after_seal, digest_mismatch };

std::string_view to_string(finding_code code) noexcept;

// Ground-truth record of what happened on the floor, as independent
// observers would see it. scan_count is the number of distinct bodies that
// exited through a scan.
enum class floor_event { late_entry, double_scan, inflate };

struct seal_log_entry {
    floor_event kind;
    std::string attendee_id;  // empty for inflate
    std::uint64_t amount = 0;  // inflate only
};

struct ground_truth {
    std::uint64_t scan_count = 0;
    std::vector<seal_log_entry> seal_log;
};

struct complaint {
    std::string attendee_id;
    std::string text;
};

// Attack injections used to build corrupted fixtures.
struct inflate {
    std::size_t count = 1;
};
struct double_scan {
    std::string attendee_id;
};
struct late_entry {
    std::string attendee_id;
};
using attack = std::variant<inflate, double_scan, late_entry>;

struct attestation {
    crypto::cosignature cosig;
    std::uint64_t attested_count = 0;
};

struct roll_list {
    std::string event_id;
    std::uint64_t cycle = 0;
    std::vector<group_element> tokens;
    digest32 list_digest{};
    std::vector<attestation> attestations;

    // Largest count any cosigner attested to; 0 without cosigners.
    std::uint64_t attested_count() const noexcept;
};

digest32 roll_digest(std::string_view event_id, std::uint64_t cycle, std::span<const group_element> tokens);

// Throws pop_error(bad_cosignature) or pop_error(duplicate_witness).
roll_list add_cosignature(roll_list roll, const crypto::cosignature& cosig, std::uint64_t attested_count);

struct finding {
    finding_code code;
    std::string detail;
};

struct verification_report {
    std::vector<finding> findings;

    bool passed() const noexcept { return findings.empty(); }
    bool has(finding_code code) const noexcept;
};

struct verify_policy {
    double cosign_threshold = default_cosign_threshold;
    std::size_t min_witnesses = default_min_witnesses;
};

// Number of verifying cosignatures a roll needs for `attested` attendees.
std::size_t required_cosignatures(std::uint64_t attested, const verify_policy& policy);

verification_report verify_event(const roll_list& roll, const ground_truth& ground, const verify_policy& policy);

class event_state {
public:
    explicit event_state(event_config config);

    void admit(const std::string& attendee_id, tick now);
    void seal(tick now);
    void scan_exit(const std::string& attendee_id, const group_element& token);
    roll_list publish();
    void finalize();
    void inject(const attack& a);
    void complain(std::string attendee_id, std::string text);

    const event_config& config() const noexcept { return config_; }
    phase current_phase() const noexcept { return phase_; }
    const std::set<std::string>& present() const noexcept { return present_; }
    const std::vector<std::pair<std::string, group_element>>& scanned() const noexcept { return scanned_; }
    const std::vector<complaint>& complaints() const noexcept { return complaints_; }
    ground_truth ground() const;

private:
    void advance_to(phase next);

    event_config config_;
    phase phase_ = phase::lobby_open;
    std::set<std::string> present_;
    std::set<std::string> scanned_ids_;
    std::set<group_element> scanned_tokens_;
    std::vector<std::pair<std::string, group_element>> scanned_;
    std::vector<group_element> fabricated_;
    std::vector<complaint> complaints_;
    std::vector<seal_log_entry> seal_log_;
};

// Fresh LobbyOpen state; throws pop_error(config_invalid).
event_state open_event(event_config config);

struct simulated_event {
    roll_list roll;
    ground_truth ground;
    std::vector<std::string> scanned_ids;
};

// Plays one whole event: everyone in `attendees` enters before the deadline,
// the lobby seals, each person exits with a token derived from `seed`, the
// optional attack is applied on the floor, and the first attendees (sorted by
// id) cosign the published list with the number of bodies they saw leave.
simulated_event simulate_event(const event_config& config,
                               const std::vector<std::string>& attendees,
                               const std::optional<attack>& floor_attack,
                               const seed32& seed,
                               const verify_policy& policy = {});

void to_json(json& j, const roll_list& roll);
void from_json(const json& j, roll_list& roll);
void to_json(json& j, const verification_report& report);
void to_json(json& j, const ground_truth& ground);
void from_json(const json& j, ground_truth& ground);

}  // namespace pop::ceremony
