#include <pop/drbg.hpp>
#include <pop/error.hpp>
#include <pop/federation.hpp>

#include <algorithm>
#include <set>

namespace pop::federation {

// ---- schedules -------------------------------------------------------------

federation_schedule build_schedule(std::uint64_t cycle, std::vector<std::string> sites, tick deadline) {
    if (sites.empty()) throw pop_error(errc::config_invalid, "a schedule needs at least one site");
    std::set<std::string> unique(sites.begin(), sites.end());
    if (unique.size() != sites.size()) throw pop_error(errc::config_invalid, "site listed twice in schedule");
    return {cycle, std::move(sites), deadline};
}

federation_schedule build_schedule(std::uint64_t cycle, const std::vector<std::pair<std::string, tick>>& site_deadlines) {
    if (site_deadlines.empty()) throw pop_error(errc::config_invalid, "a schedule needs at least one site");
    std::vector<std::string> sites;
    const tick shared = site_deadlines.front().second;
    for (const auto& [site, deadline] : site_deadlines) {
        if (deadline != shared) {
            throw pop_error(errc::deadline_mismatch, "site " + site + " asks for deadline " + std::to_string(deadline) +
                                                         ", cycle deadline is " + std::to_string(shared));
        }
        sites.push_back(site);
    }
    return build_schedule(cycle, std::move(sites), shared);
}

void schedule_series::append(federation_schedule schedule) {
    if (!schedules_.empty() && schedule.cycle <= schedules_.back().cycle) {
        throw pop_error(errc::config_invalid, "cycle " + std::to_string(schedule.cycle) + " does not follow cycle " +
                                                  std::to_string(schedules_.back().cycle));
    }
    schedules_.push_back(std::move(schedule));
}

// ---- cross-witness lottery -------------------------------------------------

byte_vector assignment_value(std::string_view volunteer_id, std::string_view target_site) {
    byte_vector out;
    append_length_prefixed(out, std::span(reinterpret_cast<const std::uint8_t*>(volunteer_id.data()), volunteer_id.size()));
    append_length_prefixed(out, std::span(reinterpret_cast<const std::uint8_t*>(target_site.data()), target_site.size()));
    return out;
}

namespace {

constexpr int max_draw_attempts = 16;

std::optional<std::vector<witness_assignment>> try_draw(drbg& rng,
                                                        const std::vector<volunteer>& volunteers,
                                                        const std::vector<std::string>& sites,
                                                        std::size_t per_site) {
    // Random site order, so no site systematically picks first.
    std::vector<std::size_t> order(sites.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform(i)]);

    std::vector<bool> taken(volunteers.size(), false);
    std::vector<witness_assignment> out;
    for (std::size_t site_index : order) {
        const std::string& site = sites[site_index];
        std::vector<std::size_t> eligible;
        for (std::size_t v = 0; v < volunteers.size(); ++v) {
            if (!taken[v] && volunteers[v].home_site != site) eligible.push_back(v);
        }
        if (eligible.size() < per_site) return std::nullopt;
        for (std::size_t k = 0; k < per_site; ++k) {
            const std::size_t pick = k + rng.uniform(eligible.size() - k);
            std::swap(eligible[k], eligible[pick]);
            const volunteer& chosen = volunteers[eligible[k]];
            taken[eligible[k]] = true;
            witness_assignment a;
            a.volunteer_id = chosen.id;
            a.home_site = chosen.home_site;
            a.target_site = site;
            a.nonce = rng.next_seed();
            a.commitment = crypto::commit(assignment_value(a.volunteer_id, a.target_site), a.nonce);
            out.push_back(std::move(a));
        }
    }
    return out;
}

}  // namespace

std::vector<witness_assignment> assign_cross_witnesses(const seed32& lottery_seed,
                                                       const std::vector<volunteer>& volunteers,
                                                       const std::vector<std::string>& sites,
                                                       std::size_t per_site) {
    std::set<std::string> ids;
    for (const auto& v : volunteers) {
        if (!ids.insert(v.id).second) throw pop_error(errc::config_invalid, "volunteer " + v.id + " listed twice");
    }
    if (volunteers.size() < per_site * sites.size()) {
        throw pop_error(errc::insufficient_volunteers, std::to_string(volunteers.size()) + " volunteers for " +
                                                           std::to_string(per_site * sites.size()) + " assignments");
    }
    drbg rng("pop/federation/lottery", lottery_seed);
    for (int attempt = 0; attempt < max_draw_attempts; ++attempt) {
        if (auto drawn = try_draw(rng, volunteers, sites, per_site)) return std::move(*drawn);
    }
    throw pop_error(errc::insufficient_volunteers, "not enough volunteers from other sites for every target");
}

std::vector<crypto::commitment> published_commitments(const std::vector<witness_assignment>& assignments) {
    std::vector<crypto::commitment> out;
    out.reserve(assignments.size());
    for (const auto& a : assignments) out.push_back(a.commitment);
    std::sort(out.begin(), out.end(),
              [](const crypto::commitment& x, const crypto::commitment& y) { return x.value_digest < y.value_digest; });
    return out;
}

bool reveal_opens(const revelation& r) {
    return crypto::open_verify(r.commitment, assignment_value(r.volunteer_id, r.said.site), r.nonce);
}

witness_assignment reveal_witness(witness_assignment assignment,
                                  const seed32& nonce,
                                  testimony said,
                                  ceremony::phase target_phase) {
    if (target_phase != ceremony::phase::finalized) {
        throw pop_error(errc::too_early, "cross-witness status stays secret until the event is finalized");
    }
    revelation r{assignment.volunteer_id, assignment.commitment, nonce, std::move(said)};
    if (!reveal_opens(r)) throw pop_error(errc::bad_reveal, "reveal does not open the published commitment");
    assignment.revealed = std::move(r);
    return assignment;
}

// ---- cycle verification ----------------------------------------------------

std::string_view to_string(flag_reason reason) noexcept {
    switch (reason) {
        case flag_reason::no_cross_witness: return "NoCrossWitness";
        case flag_reason::testimony_contradiction: return "TestimonyContradiction";
        case flag_reason::deadline_mismatch: return "DeadlineMismatch";
        case flag_reason::body_duplication: return "BodyDuplication";
    }
    return "Unknown";
}

bool cycle_report::flagged(const std::string& site, flag_reason reason) const {
    auto it = flagged_sites.find(site);
    if (it == flagged_sites.end()) return false;
    return std::any_of(it->second.begin(), it->second.end(), [reason](const site_flag& f) { return f.reason == reason; });
}

cycle_report verify_cycle(const std::vector<site_record>& records,
                          const federation_schedule& schedule,
                          const std::vector<crypto::commitment>& commitments,
                          const std::vector<revelation>& reveals,
                          const verify_options& options) {
    std::map<std::string, std::vector<site_flag>> flags;
    auto flag = [&](const std::string& site, flag_reason reason, std::string detail) {
        flags[site].push_back({reason, std::move(detail)});
    };

    const std::set<std::string> scheduled(schedule.sites.begin(), schedule.sites.end());
    std::set<crypto::commitment, decltype([](const crypto::commitment& a, const crypto::commitment& b) {
                 return a.value_digest < b.value_digest;
             })>
        published(commitments.begin(), commitments.end());

    std::map<std::string, std::vector<const revelation*>> verified_by_site;
    for (const auto& r : reveals) {
        if (published.contains(r.commitment) && reveal_opens(r)) verified_by_site[r.said.site].push_back(&r);
    }

    std::map<std::string, std::vector<std::string>> sites_of_body;
    std::vector<std::string> evaluated;
    for (const auto& rec : records) {
        evaluated.push_back(rec.site_id);
        for (const auto& b : rec.attendee_bodies) sites_of_body[b].push_back(rec.site_id);

        if (!scheduled.contains(rec.site_id)) {
            flag(rec.site_id, flag_reason::deadline_mismatch, "site is not on the cycle schedule");
        } else if (rec.deadline != schedule.deadline || rec.cycle != schedule.cycle || rec.roll.cycle != schedule.cycle) {
            flag(rec.site_id, flag_reason::deadline_mismatch,
                 "event ran with deadline " + std::to_string(rec.deadline) + " in cycle " + std::to_string(rec.cycle) +
                     ", schedule says " + std::to_string(schedule.deadline) + " in cycle " + std::to_string(schedule.cycle));
        }

        const auto it = verified_by_site.find(rec.site_id);
        if (it == verified_by_site.end() || it->second.empty()) {
            flag(rec.site_id, flag_reason::no_cross_witness, "no verified cross-witness reveal");
            continue;
        }
        const std::uint64_t listed = rec.roll.tokens.size();
        for (const revelation* r : it->second) {
            const std::uint64_t seen = r->said.observed_count;
            const std::uint64_t gap = seen > listed ? seen - listed : listed - seen;
            if (gap > options.testimony_tolerance) {
                flag(rec.site_id, flag_reason::testimony_contradiction,
                     "witness observed " + std::to_string(seen) + ", site published " + std::to_string(listed));
            } else if (!r->said.regular) {
                flag(rec.site_id, flag_reason::testimony_contradiction, "witness reported an irregular event");
            }
        }
    }

    for (const auto& [body_id, sites] : sites_of_body) {
        if (sites.size() < 2) continue;
        for (const auto& site : std::set<std::string>(sites.begin(), sites.end())) {
            flag(site, flag_reason::body_duplication, "one body present at " + std::to_string(sites.size()) + " events");
        }
    }

    cycle_report report;
    std::set<std::string> listed_sites;
    auto consider = [&](const std::string& site) {
        if (!listed_sites.insert(site).second) return;
        if (!flags.contains(site)) report.passed_sites.push_back(site);
    };
    for (const auto& site : schedule.sites) consider(site);
    for (const auto& site : evaluated) consider(site);
    report.flagged_sites = std::move(flags);
    return report;
}

// ---- simulation ------------------------------------------------------------

namespace {

seed32 derive_seed(const seed32& seed, std::string_view purpose, std::string_view who, std::uint64_t cycle) {
    return crypto::transcript("pop/federation/sim").append(seed).append(purpose).append(who).append_u64(cycle).digest();
}

constexpr std::int64_t default_fabricated_tokens = 50;

}  // namespace

cycle_outcome simulate_cycle(const world& w,
                             const federation_schedule& schedule,
                             const std::map<std::string, site_plan>& plans,
                             const std::vector<witness_assignment>& assignments,
                             const seed32& seed) {
    const std::set<std::string> scheduled(schedule.sites.begin(), schedule.sites.end());

    // Where every body physically is this cycle.
    std::map<std::string, std::string> location;
    for (const auto& b : w.bodies) {
        if (location.contains(b.id)) throw pop_error(errc::body_duplication, "body " + b.id + " listed twice");
        location[b.id] = b.home_site;
    }
    for (const auto& [body_id, sites] : w.script) {
        if (sites.size() > 1) {
            throw pop_error(errc::body_duplication, "body " + body_id + " cannot attend " + std::to_string(sites.size()) +
                                                        " synchronized events");
        }
        if (!location.contains(body_id)) throw pop_error(errc::config_invalid, "script names unknown body " + body_id);
        location[body_id] = sites.empty() ? std::string{} : sites.front();
    }
    for (const auto& a : assignments) {
        if (!location.contains(a.volunteer_id)) {
            throw pop_error(errc::config_invalid, "cross-witness " + a.volunteer_id + " is not a body in the world");
        }
        location[a.volunteer_id] = a.target_site;
    }

    std::map<std::string, std::vector<std::string>> attendees;
    for (const auto& b : w.bodies) {
        const std::string& site = location[b.id];
        if (scheduled.contains(site)) attendees[site].push_back(b.id);
    }

    cycle_outcome outcome;
    outcome.commitments = published_commitments(assignments);

    for (const auto& site : schedule.sites) {
        const auto plan_it = plans.find(site);
        const site_plan plan = plan_it == plans.end() ? site_plan{} : plan_it->second;

        ceremony::event_config config;
        config.event_id = site + "/" + std::to_string(schedule.cycle);
        config.site_id = site;
        config.cycle = schedule.cycle;
        config.deadline = schedule.deadline;
        if (plan.conduct == site_conduct::off_schedule) config.deadline += plan.amount == 0 ? 1 : plan.amount;
        config.opening = std::min<tick>(0, config.deadline - 1);

        ceremony::event_state event = ceremony::open_event(config);
        std::vector<std::string> present;
        if (plan.conduct != site_conduct::fabricate) present = attendees[site];

        for (const auto& id : present) event.admit(id, config.opening);
        event.seal(config.deadline);

        if (plan.conduct == site_conduct::late_entry) {
            const std::string late = "late@" + site;
            event.inject(ceremony::late_entry{late});
            present.push_back(late);
        }
        for (const auto& id : present) {
            event.scan_exit(id, crypto::keygen(derive_seed(seed, "token", id, schedule.cycle)).public_element);
        }
        if (plan.conduct == site_conduct::inflate) {
            event.inject(ceremony::inflate{static_cast<std::size_t>(std::max<std::int64_t>(plan.amount, 1))});
        } else if (plan.conduct == site_conduct::fabricate) {
            const auto claimed = plan.amount > 0 ? plan.amount : default_fabricated_tokens;
            event.inject(ceremony::inflate{static_cast<std::size_t>(claimed)});
        } else if (plan.conduct == site_conduct::double_scan && !present.empty()) {
            event.inject(ceremony::double_scan{present.front()});
        }

        if (event.scanned().empty() && plan.conduct != site_conduct::fabricate &&
            plan.conduct != site_conduct::inflate) {
            // Nobody showed up and nothing was claimed: no event to publish.
            continue;
        }

        ceremony::roll_list roll = event.publish();
        const ceremony::ground_truth ground = event.ground();

        // Cosigners: attendees for a real event, the organizers themselves for a fabricated one.
        std::vector<std::string> signers;
        const std::size_t needed = ceremony::required_cosignatures(roll.tokens.size(), {});
        if (plan.conduct == site_conduct::fabricate) {
            for (std::size_t i = 0; i < needed; ++i) signers.push_back("organizer" + std::to_string(i) + "@" + site);
        } else {
            std::vector<std::string> sorted = present;
            std::sort(sorted.begin(), sorted.end());
            sorted.resize(std::min(sorted.size(), needed));
            signers = std::move(sorted);
        }
        const std::uint64_t attested = plan.conduct == site_conduct::fabricate ? roll.tokens.size() : ground.scan_count;
        for (const auto& signer : signers) {
            const auto key = crypto::keygen(derive_seed(seed, "witness", signer, schedule.cycle));
            roll = ceremony::add_cosignature(std::move(roll), crypto::cosign(key.secret, roll.list_digest), attested);
        }
        event.finalize();

        // Cross-witnesses sent to a fabricated site find no event and have nothing to reveal.
        if (plan.conduct != site_conduct::fabricate) {
            const bool irregular = plan.conduct == site_conduct::late_entry || plan.conduct == site_conduct::double_scan;
            for (const auto& a : assignments) {
                if (a.target_site != site) continue;
                auto revealed = reveal_witness(a, a.nonce, testimony{site, ground.scan_count, !irregular},
                                               event.current_phase());
                outcome.reveals.push_back(*revealed.revealed);
            }
        }

        site_record rec;
        rec.site_id = site;
        rec.cycle = schedule.cycle;
        rec.deadline = config.deadline;
        rec.roll = std::move(roll);
        rec.ground = ground;
        rec.attendee_bodies = present;
        outcome.records.push_back(std::move(rec));
    }
    return outcome;
}

// ---- JSON ------------------------------------------------------------------

void to_json(json& j, const federation_schedule& s) {
    j = json{{"cycle", s.cycle}, {"sites", s.sites}, {"deadline", s.deadline}};
}

void from_json(const json& j, federation_schedule& s) {
    try {
        s = build_schedule(require(j, "cycle").get<std::uint64_t>(), require(j, "sites").get<std::vector<std::string>>(),
                           require(j, "deadline").get<tick>());
    } catch (const json::exception& e) {
        throw pop_error(errc::malformed_input, std::string("schedule: ") + e.what());
    }
}

void to_json(json& j, const revelation& r) {
    j = json{{"volunteer_id", r.volunteer_id},
             {"commitment", r.commitment},
             {"nonce", to_hex(r.nonce)},
             {"testimony",
              {{"site", r.said.site}, {"observed_count", r.said.observed_count}, {"regular", r.said.regular}}}};
}

void from_json(const json& j, revelation& r) {
    try {
        r.volunteer_id = require(j, "volunteer_id").get<std::string>();
        r.commitment = require(j, "commitment").get<crypto::commitment>();
        r.nonce = seed_from_json(require(j, "nonce"), "nonce");
        const json& t = require(j, "testimony");
        r.said.site = require(t, "site").get<std::string>();
        r.said.observed_count = require(t, "observed_count").get<std::uint64_t>();
        r.said.regular = require(t, "regular").get<bool>();
    } catch (const json::exception& e) {
        throw pop_error(errc::malformed_input, std::string("reveal: ") + e.what());
    }
}

void to_json(json& j, const site_record& r) {
    j = json{{"site_id", r.site_id},
             {"cycle", r.cycle},
             {"deadline", r.deadline},
             {"roll", r.roll},
             {"ground", r.ground},
             {"attendee_bodies", r.attendee_bodies}};
}

void from_json(const json& j, site_record& r) {
    try {
        r.site_id = require(j, "site_id").get<std::string>();
        r.cycle = require(j, "cycle").get<std::uint64_t>();
        r.deadline = require(j, "deadline").get<tick>();
        r.roll = require(j, "roll").get<ceremony::roll_list>();
        r.ground = require(j, "ground").get<ceremony::ground_truth>();
        r.attendee_bodies = require(j, "attendee_bodies").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw pop_error(errc::malformed_input, std::string("site record: ") + e.what());
    }
}

void to_json(json& j, const cycle_report& r) {
    json flagged = json::object();
    for (const auto& [site, flags] : r.flagged_sites) {
        json list = json::array();
        for (const auto& f : flags) list.push_back(json{{"reason", to_string(f.reason)}, {"detail", f.detail}});
        flagged[site] = std::move(list);
    }
    j = json{{"passed", r.all_passed()}, {"passed_sites", r.passed_sites}, {"flagged_sites", std::move(flagged)}};
}

json cycle_bundle(const federation_schedule& schedule, const cycle_outcome& outcome, const cycle_report& report) {
    return json{{"schedule", schedule},
                {"commitments", outcome.commitments},
                {"records", outcome.records},
                {"reveals", outcome.reveals},
                {"report", report}};
}

}  // namespace pop::federation
