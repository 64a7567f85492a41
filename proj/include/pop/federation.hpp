#pragma once

// Multi-site synchronized cycles: one shared entry deadline per cycle, the
// secret cross-witness lottery (commit now, reveal after the event), and
// cycle-level checks for fabricated or inflated sites.

#include <pop/ceremony.hpp>
#include <pop/crypto.hpp>
#include <pop/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pop::federation {

using ceremony::tick;

inline constexpr std::size_t default_witnesses_per_site = 2;

struct federation_schedule {
    std::uint64_t cycle = 0;
    std::vector<std::string> sites;
    tick deadline = 0;
};

// Throws pop_error(config_invalid) for an empty or repeating site list.
federation_schedule build_schedule(std::uint64_t cycle, std::vector<std::string> sites, tick deadline);

// Per-site deadlines are accepted only when they all agree; otherwise
// pop_error(deadline_mismatch).
federation_schedule build_schedule(std::uint64_t cycle, const std::vector<std::pair<std::string, tick>>& site_deadlines);

// Ordered run of schedules; cycle numbers must strictly increase.
class schedule_series {
public:
    void append(federation_schedule schedule);
    const std::vector<federation_schedule>& schedules() const noexcept { return schedules_; }

private:
    std::vector<federation_schedule> schedules_;
};

enum class behavior { honest, minion, organizer };

struct body {
    std::string id;
    std::string home_site;
    behavior role = behavior::honest;
    std::string controller;  // minions only
};

struct volunteer {
    std::string id;
    std::string home_site;
};

struct testimony {
    std::string site;
    std::uint64_t observed_count = 0;
    bool regular = true;
};

struct revelation {
    std::string volunteer_id;
    crypto::commitment commitment;
    seed32 nonce{};
    testimony said;
};

// The full assignment is private to the volunteer (and the lottery draw)
// until after the event; only `commitment` is published beforehand.
struct witness_assignment {
    std::string volunteer_id;
    std::string home_site;
    std::string target_site;
    crypto::commitment commitment;
    seed32 nonce{};
    std::optional<revelation> revealed;
};

byte_vector assignment_value(std::string_view volunteer_id, std::string_view target_site);

// Deterministic in the lottery seed. The seed must stay private until the
// reveals, since it determines every target and nonce.
// Throws pop_error(insufficient_volunteers).
std::vector<witness_assignment> assign_cross_witnesses(const seed32& lottery_seed,
                                                       const std::vector<volunteer>& volunteers,
                                                       const std::vector<std::string>& sites,
                                                       std::size_t per_site = default_witnesses_per_site);

// Published pre-event view: commitment digests only, in sorted order.
std::vector<crypto::commitment> published_commitments(const std::vector<witness_assignment>& assignments);

// Throws pop_error(too_early) unless the target event is finalized and
// pop_error(bad_reveal) when (volunteer, site, nonce) does not open the commitment.
witness_assignment reveal_witness(witness_assignment assignment,
                                  const seed32& nonce,
                                  testimony said,
                                  ceremony::phase target_phase);

bool reveal_opens(const revelation& r);

struct site_record {
    std::string site_id;
    std::uint64_t cycle = 0;
    tick deadline = 0;
    ceremony::roll_list roll;
    // Simulation ground truth; never part of a published artifact.
    ceremony::ground_truth ground;
    std::vector<std::string> attendee_bodies;
};

enum class flag_reason { no_cross_witness, testimony_contradiction, deadline_mismatch, body_duplication };

std::string_view to_string(flag_reason reason) noexcept;

struct site_flag {
    flag_reason reason;
    std::string detail;
};

struct cycle_report {
    std::vector<std::string> passed_sites;
    std::map<std::string, std::vector<site_flag>> flagged_sites;

    bool all_passed() const noexcept { return flagged_sites.empty(); }
    bool flagged(const std::string& site, flag_reason reason) const;
};

struct verify_options {
    // Allowed |observed_count - published tokens|.
    std::uint64_t testimony_tolerance = 0;
};

cycle_report verify_cycle(const std::vector<site_record>& records,
                          const federation_schedule& schedule,
                          const std::vector<crypto::commitment>& commitments,
                          const std::vector<revelation>& reveals,
                          const verify_options& options = {});

enum class site_conduct { honest, inflate, fabricate, late_entry, double_scan, off_schedule };

struct site_plan {
    site_conduct conduct = site_conduct::honest;
    // Inflate: extra tokens. Fabricate: tokens claimed. Off-schedule: deadline shift.
    std::int64_t amount = 0;
};

struct world {
    std::vector<body> bodies;
    // Optional per-body site list; a body scripted into two sites is rejected.
    std::map<std::string, std::vector<std::string>> script;
};

struct cycle_outcome {
    std::vector<site_record> records;
    std::vector<crypto::commitment> commitments;
    std::vector<revelation> reveals;
};

// Runs every site's ceremony for one cycle. Each body attends at most one
// site: its home site, its scripted site, or its cross-witness target.
// Throws pop_error(body_duplication) for an impossible script.
cycle_outcome simulate_cycle(const world& w,
                             const federation_schedule& schedule,
                             const std::map<std::string, site_plan>& plans,
                             const std::vector<witness_assignment>& assignments,
                             const seed32& seed);

void to_json(json& j, const federation_schedule& s);
void from_json(const json& j, federation_schedule& s);
void to_json(json& j, const revelation& r);
void from_json(const json& j, revelation& r);
void to_json(json& j, const site_record& r);
void from_json(const json& j, site_record& r);
void to_json(json& j, const cycle_report& r);

// Canonical bundle: schedule, commitments, per-site records, reveals, report.
json cycle_bundle(const federation_schedule& schedule, const cycle_outcome& outcome, const cycle_report& report);

}  // namespace pop::federation
