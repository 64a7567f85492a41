#include <pop/ceremony.hpp>
#include <pop/error.hpp>

#include <algorithm>
#include <cmath>

namespace pop::ceremony {

void validate(const event_config& config) {
    if (config.event_id.empty()) throw pop_error(errc::config_invalid, "event_id is empty");
    if (config.deadline <= config.opening) {
        throw pop_error(errc::config_invalid, "deadline must be strictly after the opening tick");
    }
    if (!(config.cosign_threshold > 0.0 && config.cosign_threshold <= 1.0)) {
        throw pop_error(errc::config_invalid, "cosign_threshold must lie in (0, 1]");
    }
    if (config.min_witnesses == 0) throw pop_error(errc::config_invalid, "min_witnesses must be positive");
}

std::string_view to_string(phase p) noexcept {
    switch (p) {
        case phase::lobby_open: return "LobbyOpen";
        case phase::sealed: return "Sealed";
        case phase::scanning: return "Scanning";
        case phase::published: return "Published";
        case phase::finalized: return "Finalized";
    }
    return "Unknown";
}

std::string_view to_string(finding_code code) noexcept {
    switch (code) {
        case finding_code::inflation_detected: return "InflationDetected";
        case finding_code::duplicate_scan: return "DuplicateScan";
        case finding_code::cosign_shortfall: return "CosignShortfall";
        case finding_code::entry_after_seal: return "EntryAfterSeal";
        case finding_code::digest_mismatch: return "DigestMismatch";
    }
    return "Unknown";
}

namespace {

std::string_view to_string(floor_event kind) noexcept {
    switch (kind) {
        case floor_event::late_entry: return "LateEntry";
        case floor_event::double_scan: return "DoubleScan";
        case floor_event::inflate: return "Inflate";
    }
    return "Unknown";
}

floor_event floor_event_from_string(const std::string& s) {
    if (s == "LateEntry") return floor_event::late_entry;
    if (s == "DoubleScan") return floor_event::double_scan;
    if (s == "Inflate") return floor_event::inflate;
    throw pop_error(errc::malformed_input, "unknown seal_log kind '" + s + "'");
}

}  // namespace

// ---- roll list -------------------------------------------------------------

std::uint64_t roll_list::attested_count() const noexcept {
    std::uint64_t best = 0;
    for (const auto& a : attestations) best = std::max(best, a.attested_count);
    return best;
}

digest32 roll_digest(std::string_view event_id, std::uint64_t cycle, std::span<const group_element> tokens) {
    crypto::transcript t("pop/roll-list");
    t.append(event_id).append_u64(cycle).append_u64(tokens.size());
    for (const auto& token : tokens) t.append(token);
    return t.digest();
}

roll_list add_cosignature(roll_list roll, const crypto::cosignature& cosig, std::uint64_t attested_count) {
    if (!crypto::cosign_verify(cosig, roll.list_digest)) {
        throw pop_error(errc::bad_cosignature, "cosignature does not verify against the list digest");
    }
    for (const auto& a : roll.attestations) {
        if (a.cosig.witness_public == cosig.witness_public) {
            throw pop_error(errc::duplicate_witness, "witness " + cosig.witness_public.to_hex() + " already attested");
        }
    }
    roll.attestations.push_back({cosig, attested_count});
    return roll;
}

// ---- verification ----------------------------------------------------------

bool verification_report::has(finding_code code) const noexcept {
    return std::any_of(findings.begin(), findings.end(), [code](const finding& f) { return f.code == code; });
}

std::size_t required_cosignatures(std::uint64_t attested, const verify_policy& policy) {
    const auto by_fraction = static_cast<std::size_t>(std::ceil(policy.cosign_threshold * static_cast<double>(attested)));
    const std::size_t floor_count = std::min<std::uint64_t>(policy.min_witnesses, attested);
    return std::max(by_fraction, floor_count);
}

verification_report verify_event(const roll_list& roll, const ground_truth& ground, const verify_policy& policy) {
    verification_report report;
    auto flag = [&](finding_code code, std::string detail) { report.findings.push_back({code, std::move(detail)}); };

    const std::uint64_t listed = roll.tokens.size();

    if (roll_digest(roll.event_id, roll.cycle, roll.tokens) != roll.list_digest) {
        flag(finding_code::digest_mismatch, "list_digest does not match event_id, cycle and tokens");
    }
    std::set<group_element> distinct(roll.tokens.begin(), roll.tokens.end());
    if (distinct.size() != roll.tokens.size()) {
        flag(finding_code::duplicate_scan, "token list repeats a token");
    }

    if (listed > ground.scan_count) {
        flag(finding_code::inflation_detected,
             "list has " + std::to_string(listed) + " tokens but " + std::to_string(ground.scan_count) + " bodies were scanned");
    }

    std::set<group_element> witnesses;
    std::size_t verifying = 0;
    for (const auto& a : roll.attestations) {
        if (!crypto::cosign_verify(a.cosig, roll.list_digest)) continue;
        if (!witnesses.insert(a.cosig.witness_public).second) continue;
        ++verifying;
        if (a.attested_count < listed) {
            flag(finding_code::inflation_detected,
                 "witness " + a.cosig.witness_public.to_hex() + " attested " + std::to_string(a.attested_count) +
                     " attendees for a list of " + std::to_string(listed));
        }
    }

    const std::uint64_t attested = std::max(roll.attested_count(), listed);
    const std::size_t required = required_cosignatures(attested, policy);
    if (verifying < required) {
        flag(finding_code::cosign_shortfall,
             std::to_string(verifying) + " verifying cosignatures, " + std::to_string(required) + " required");
    }

    for (const auto& entry : ground.seal_log) {
        switch (entry.kind) {
            case floor_event::late_entry:
                flag(finding_code::entry_after_seal, "entry recorded after the seal");
                break;
            case floor_event::double_scan:
                flag(finding_code::duplicate_scan, "one attendee scanned more than once");
                break;
            case floor_event::inflate:
                // Surfaces through the count comparison above.
                break;
        }
    }
    return report;
}

// ---- event state -----------------------------------------------------------

event_state::event_state(event_config config) : config_(std::move(config)) {
    validate(config_);
}

event_state open_event(event_config config) {
    return event_state(std::move(config));
}

void event_state::advance_to(phase next) {
    if (next < phase_) throw std::logic_error("phase transitions are forward only");
    phase_ = next;
}

void event_state::admit(const std::string& attendee_id, tick now) {
    if (phase_ != phase::lobby_open || now >= config_.deadline) {
        throw pop_error(errc::entry_after_seal, "lobby closed at tick " + std::to_string(config_.deadline));
    }
    if (!present_.insert(attendee_id).second) {
        throw pop_error(errc::duplicate_entry, "attendee already in the lobby");
    }
}

void event_state::seal(tick now) {
    if (phase_ != phase::lobby_open) throw pop_error(errc::wrong_phase, "event already sealed");
    if (now < config_.deadline) {
        throw pop_error(errc::seal_too_early, "seal at tick " + std::to_string(now) + " before deadline " +
                                                  std::to_string(config_.deadline));
    }
    advance_to(phase::sealed);
}

void event_state::scan_exit(const std::string& attendee_id, const group_element& token) {
    if (phase_ != phase::sealed && phase_ != phase::scanning) {
        throw pop_error(errc::wrong_phase, std::string("cannot scan in phase ") + std::string(to_string(phase_)));
    }
    if (!present_.contains(attendee_id)) throw pop_error(errc::not_present, "attendee was never admitted");
    if (scanned_ids_.contains(attendee_id)) throw pop_error(errc::already_scanned, "attendee already scanned");
    if (token.is_identity() || scanned_tokens_.contains(token)) {
        throw pop_error(errc::token_reused, "token already scanned at this event");
    }
    scanned_ids_.insert(attendee_id);
    scanned_tokens_.insert(token);
    scanned_.emplace_back(attendee_id, token);
    advance_to(phase::scanning);
}

roll_list event_state::publish() {
    if (phase_ == phase::sealed && scanned_.empty() && fabricated_.empty()) {
        throw pop_error(errc::nothing_scanned, "no tokens to publish");
    }
    if (phase_ != phase::scanning) {
        throw pop_error(errc::wrong_phase, std::string("cannot publish in phase ") + std::string(to_string(phase_)));
    }
    roll_list roll;
    roll.event_id = config_.event_id;
    roll.cycle = config_.cycle;
    roll.tokens.reserve(scanned_.size() + fabricated_.size());
    for (const auto& [id, token] : scanned_) roll.tokens.push_back(token);
    roll.tokens.insert(roll.tokens.end(), fabricated_.begin(), fabricated_.end());
    roll.list_digest = roll_digest(roll.event_id, roll.cycle, roll.tokens);
    advance_to(phase::published);
    return roll;
}

void event_state::finalize() {
    if (phase_ != phase::published) throw pop_error(errc::wrong_phase, "only a published event can be finalized");
    advance_to(phase::finalized);
}

void event_state::complain(std::string attendee_id, std::string text) {
    complaints_.push_back({std::move(attendee_id), std::move(text)});
}

ground_truth event_state::ground() const {
    ground_truth g;
    std::set<std::string> bodies;
    for (const auto& [id, token] : scanned_) bodies.insert(id);
    g.scan_count = bodies.size();
    g.seal_log = seal_log_;
    return g;
}

namespace {

group_element fabricated_token(const event_config& config, std::size_t counter) {
    return crypto::transcript("pop/ceremony/fabricated")
        .append(config.event_id)
        .append(config.site_id)
        .append_u64(config.cycle)
        .append_u64(counter)
        .to_group();
}

}  // namespace

void event_state::inject(const attack& a) {
    const bool after_seal = phase_ == phase::sealed || phase_ == phase::scanning;
    if (!after_seal) {
        throw pop_error(errc::wrong_phase, std::string("attacks apply between seal and publish, not in ") +
                                               std::string(to_string(phase_)));
    }
    std::visit(
        [&](const auto& attack_kind) {
            using T = std::decay_t<decltype(attack_kind)>;
            if constexpr (std::is_same_v<T, inflate>) {
                for (std::size_t i = 0; i < attack_kind.count; ++i) {
                    fabricated_.push_back(fabricated_token(config_, fabricated_.size() + scanned_.size()));
                }
                seal_log_.push_back({floor_event::inflate, {}, attack_kind.count});
                advance_to(phase::scanning);
            } else if constexpr (std::is_same_v<T, double_scan>) {
                if (!scanned_ids_.contains(attack_kind.attendee_id)) {
                    throw pop_error(errc::not_present, "double scan needs an attendee who was already scanned");
                }
                // The second token bypasses the AlreadyScanned guard on purpose.
                const group_element extra = fabricated_token(config_, fabricated_.size() + scanned_.size());
                scanned_tokens_.insert(extra);
                scanned_.emplace_back(attack_kind.attendee_id, extra);
                seal_log_.push_back({floor_event::double_scan, attack_kind.attendee_id, 0});
            } else {
                if (present_.contains(attack_kind.attendee_id)) {
                    throw pop_error(errc::duplicate_entry, "late entrant already in the lobby");
                }
                present_.insert(attack_kind.attendee_id);
                seal_log_.push_back({floor_event::late_entry, attack_kind.attendee_id, 0});
            }
        },
        a);
}

simulated_event simulate_event(const event_config& config,
                               const std::vector<std::string>& attendees,
                               const std::optional<attack>& floor_attack,
                               const seed32& seed,
                               const verify_policy& policy) {
    auto key_for = [&](std::string_view purpose, const std::string& id) {
        return crypto::keygen(crypto::transcript("pop/ceremony/sim")
                                  .append(seed)
                                  .append(config.event_id)
                                  .append(purpose)
                                  .append(id)
                                  .digest());
    };

    event_state event = open_event(config);
    for (const auto& id : attendees) event.admit(id, config.opening);
    event.seal(config.deadline);

    std::vector<std::string> leaving = attendees;
    if (floor_attack && std::holds_alternative<late_entry>(*floor_attack)) {
        event.inject(*floor_attack);
        leaving.push_back(std::get<late_entry>(*floor_attack).attendee_id);
    }
    for (const auto& id : leaving) event.scan_exit(id, key_for("token", id).public_element);
    if (floor_attack && !std::holds_alternative<late_entry>(*floor_attack)) event.inject(*floor_attack);

    simulated_event out;
    out.roll = event.publish();
    out.ground = event.ground();
    for (const auto& [id, token] : event.scanned()) out.scanned_ids.push_back(id);

    std::vector<std::string> signers = attendees;
    std::sort(signers.begin(), signers.end());
    signers.resize(std::min(signers.size(), required_cosignatures(out.roll.tokens.size(), policy)));
    for (const auto& id : signers) {
        out.roll = add_cosignature(std::move(out.roll), crypto::cosign(key_for("witness", id).secret, out.roll.list_digest),
                                   out.ground.scan_count);
    }
    event.finalize();
    return out;
}

// ---- JSON ------------------------------------------------------------------

void to_json(json& j, const roll_list& roll) {
    json attestations = json::array();
    for (const auto& a : roll.attestations) {
        attestations.push_back(json{{"cosignature", a.cosig}, {"attested_count", a.attested_count}});
    }
    j = json{{"event_id", roll.event_id},
             {"cycle", roll.cycle},
             {"tokens", roll.tokens},
             {"list_digest", to_hex(roll.list_digest)},
             {"attestations", std::move(attestations)},
             {"attested_count", roll.attested_count()}};
}

void from_json(const json& j, roll_list& roll) {
    try {
        roll.event_id = require(j, "event_id").get<std::string>();
        roll.cycle = require(j, "cycle").get<std::uint64_t>();
        roll.tokens = require(j, "tokens").get<std::vector<group_element>>();
        roll.list_digest = digest_from_json(require(j, "list_digest"), "list_digest");
        roll.attestations.clear();
        for (const auto& a : require(j, "attestations")) {
            roll.attestations.push_back(
                {require(a, "cosignature").get<crypto::cosignature>(), require(a, "attested_count").get<std::uint64_t>()});
        }
    } catch (const json::exception& e) {
        throw pop_error(errc::malformed_input, std::string("roll list: ") + e.what());
    }
    if (j.contains("attested_count") && j.at("attested_count") != roll.attested_count()) {
        throw pop_error(errc::malformed_input, "roll list: attested_count disagrees with attestations");
    }
}

void to_json(json& j, const verification_report& report) {
    json findings = json::array();
    for (const auto& f : report.findings) {
        findings.push_back(json{{"code", to_string(f.code)}, {"detail", f.detail}});
    }
    j = json{{"passed", report.passed()}, {"findings", std::move(findings)}};
}

void to_json(json& j, const ground_truth& ground) {
    json log = json::array();
    for (const auto& e : ground.seal_log) {
        log.push_back(json{{"kind", to_string(e.kind)}, {"attendee_id", e.attendee_id}, {"amount", e.amount}});
    }
    j = json{{"scan_count", ground.scan_count}, {"seal_log", std::move(log)}};
}

void from_json(const json& j, ground_truth& ground) {
    try {
        ground.scan_count = require(j, "scan_count").get<std::uint64_t>();
        ground.seal_log.clear();
        for (const auto& e : require(j, "seal_log")) {
            ground.seal_log.push_back({floor_event_from_string(require(e, "kind").get<std::string>()),
                                       e.value("attendee_id", std::string{}), e.value("amount", std::uint64_t{0})});
        }
    } catch (const json::exception& e) {
        throw pop_error(errc::malformed_input, std::string("ground truth: ") + e.what());
    }
}

}  // namespace pop::ceremony
