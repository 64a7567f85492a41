#include <pop/applications.hpp>
#include <pop/ceremony.hpp>
#include <pop/cli.hpp>
#include <pop/error.hpp>
#include <pop/federation.hpp>
#include <pop/json.hpp>
#include <pop/sybilsim.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

namespace pop::cli {

namespace fs = std::filesystem;

namespace {

seed32 seed_from_u64(std::uint64_t seed, std::string_view purpose) {
    return crypto::transcript("pop/cli/seed").append_u64(seed).append(purpose).digest();
}

std::string hex_digest(std::string_view content) {
    return to_hex(crypto::sha256(std::span(reinterpret_cast<const std::uint8_t*>(content.data()), content.size())));
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw pop_error(errc::malformed_input, "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw pop_error(errc::malformed_input, what + ": " + e.what());
    }
}

// Converts nlohmann type errors raised while reading a fixture.
template <typename F>
auto reading(const std::string& what, F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw pop_error(errc::malformed_input, what + ": " + e.what());
    }
}

class run_context {
public:
    run_context(std::string command, std::vector<std::string> args, fs::path out_dir, std::uint64_t seed,
                std::ostream& out, std::ostream& err)
        : command_(std::move(command)), args_(std::move(args)), out_dir_(std::move(out_dir)), seed_(seed), out(out),
          err(err) {}

    std::uint64_t seed() const noexcept { return seed_; }
    const fs::path& out_dir() const noexcept { return out_dir_; }

    json read_json(const fs::path& path) {
        const std::string text = read_file(path);
        inputs_.push_back(json{{"path", path.string()}, {"sha256", hex_digest(text)}});
        return parse_json(text, path.string());
    }

    void write_output(const fs::path& path, const std::string& content) {
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw pop_error(errc::malformed_input, "cannot write " + path.string());
        f << content;
        outputs_.push_back(json{{"file", path.filename().string()}, {"sha256", hex_digest(content)}});
    }

    void write_json(const std::string& name, const json& j) { write_output(out_dir_ / name, canonical_dump(j) + "\n"); }

    void set_csv(const std::string& csv) { csv_ = csv; }

    void write_manifest() {
        json m{{"command", command_},
               {"args", args_},
               {"master_seed", seed_},
               {"out_dir", out_dir_.string()},
               {"csv", csv_},
               {"inputs", inputs_},
               {"outputs", outputs_},
               {"tool_version", tool_version}};
        fs::create_directories(out_dir_);
        std::ofstream f(out_dir_ / (command_ + ".manifest.json"), std::ios::binary | std::ios::trunc);
        f << canonical_dump(m) << "\n";
    }

private:
    std::string command_;
    std::vector<std::string> args_;
    fs::path out_dir_;
    std::uint64_t seed_;
    std::string csv_;
    json inputs_ = json::array();
    json outputs_ = json::array();

public:
    std::ostream& out;
    std::ostream& err;
};

// ---- ceremony ----------------------------------------------------------------

ceremony::event_config event_config_from_json(const json& j) {
    return reading("event scenario", [&] {
        ceremony::event_config c;
        c.event_id = j.value("event_id", std::string("event"));
        c.site_id = j.value("site_id", std::string("site"));
        c.cycle = j.value("cycle", std::uint64_t{0});
        c.opening = j.value("opening", ceremony::tick{0});
        c.deadline = j.value("deadline", ceremony::tick{1});
        c.cosign_threshold = j.value("cosign_threshold", ceremony::default_cosign_threshold);
        c.min_witnesses = j.value("min_witnesses", ceremony::default_min_witnesses);
        return c;
    });
}

ceremony::verify_policy policy_from(const ceremony::event_config& c) { return {c.cosign_threshold, c.min_witnesses}; }

std::vector<std::string> attendees_from_json(const json& j) {
    return reading("attendees", [&] {
        const json& a = require(j, "attendees");
        std::vector<std::string> ids;
        if (a.is_number_unsigned()) {
            const auto n = a.get<std::size_t>();
            for (std::size_t i = 1; i <= n; ++i) {
                std::ostringstream id;
                id << 'p' << std::setw(3) << std::setfill('0') << i;
                ids.push_back(id.str());
            }
        } else {
            ids = a.get<std::vector<std::string>>();
        }
        return ids;
    });
}

std::optional<ceremony::attack> attack_from_json(const json& j, const std::vector<std::string>& attendees) {
    if (!j.contains("attack") || j["attack"].is_null()) return std::nullopt;
    return reading("attack", [&]() -> std::optional<ceremony::attack> {
        const json& a = j["attack"];
        const auto kind = require(a, "kind").get<std::string>();
        if (kind == "inflate") return ceremony::inflate{a.value("count", std::size_t{1})};
        if (kind == "double_scan") {
            if (attendees.empty()) throw pop_error(errc::malformed_input, "double_scan needs an attendee");
            return ceremony::double_scan{a.value("attendee", attendees.front())};
        }
        if (kind == "late_entry") return ceremony::late_entry{a.value("attendee", std::string("latecomer"))};
        throw pop_error(errc::malformed_input, "unknown attack kind '" + kind + "'");
    });
}

int ceremony_run(run_context& ctx, const std::string& scenario_path) {
    const json j = ctx.read_json(scenario_path);
    const auto config = event_config_from_json(j);
    ceremony::validate(config);
    const auto attendees = attendees_from_json(j);
    const auto attack = attack_from_json(j, attendees);
    const auto sim =
        ceremony::simulate_event(config, attendees, attack, seed_from_u64(ctx.seed(), "ceremony"), policy_from(config));

    json event{{"roll", sim.roll}, {"ground", sim.ground}, {"policy", {{"cosign_threshold", config.cosign_threshold},
                                                                        {"min_witnesses", config.min_witnesses}}}};
    ctx.write_json("event.json", event);
    ctx.out << canonical_dump(json(sim.roll)) << "\n";
    ctx.err << "ceremony " << config.event_id << ": " << sim.roll.tokens.size() << " tokens, "
            << sim.roll.attestations.size() << " cosignatures\n";
    return ok;
}

int ceremony_verify(run_context& ctx, const std::string& fixture_path) {
    const json j = ctx.read_json(fixture_path);
    const auto [roll, ground, policy] = reading("event fixture", [&] {
        ceremony::verify_policy p;
        if (j.contains("policy")) {
            p.cosign_threshold = j["policy"].value("cosign_threshold", p.cosign_threshold);
            p.min_witnesses = j["policy"].value("min_witnesses", p.min_witnesses);
        }
        return std::tuple{require(j, "roll").get<ceremony::roll_list>(), require(j, "ground").get<ceremony::ground_truth>(), p};
    });
    const auto report = ceremony::verify_event(roll, ground, policy);
    ctx.write_json("report.json", report);
    ctx.out << canonical_dump(json(report)) << "\n";
    if (report.passed()) {
        ctx.err << "event " << roll.event_id << ": passed\n";
    } else {
        for (const auto& f : report.findings) ctx.err << "event " << roll.event_id << ": " << to_string(f.code) << " (" << f.detail << ")\n";
    }
    return report.passed() ? ok : verification_failed;
}

// ---- federation --------------------------------------------------------------

federation::site_conduct conduct_from(const std::string& s) {
    using federation::site_conduct;
    static const std::map<std::string, site_conduct> names{{"honest", site_conduct::honest},
                                                           {"inflate", site_conduct::inflate},
                                                           {"fabricate", site_conduct::fabricate},
                                                           {"late_entry", site_conduct::late_entry},
                                                           {"double_scan", site_conduct::double_scan},
                                                           {"off_schedule", site_conduct::off_schedule}};
    const auto it = names.find(s);
    if (it == names.end()) throw pop_error(errc::malformed_input, "unknown site conduct '" + s + "'");
    return it->second;
}

int report_rejection(run_context& ctx, const pop_error& e) {
    json report{{"passed", false}, {"rejected", std::string(to_string(e.code()))}, {"detail", e.what()}};
    ctx.write_json("report.json", report);
    ctx.out << canonical_dump(report) << "\n";
    ctx.err << "cycle rejected: " << e.what() << "\n";
    return verification_failed;
}

void print_cycle_summary(run_context& ctx, const federation::cycle_report& report) {
    for (const auto& s : report.passed_sites) ctx.err << "site " << s << ": passed\n";
    for (const auto& [site, flags] : report.flagged_sites)
        for (const auto& f : flags) ctx.err << "site " << site << ": " << to_string(f.reason) << " (" << f.detail << ")\n";
}

int federation_simulate(run_context& ctx, const std::string& scenario_path) {
    const json j = ctx.read_json(scenario_path);
    struct parsed {
        std::uint64_t cycle;
        federation::tick deadline;
        std::vector<std::string> sites;
        std::map<std::string, federation::tick> site_deadlines;
        std::size_t bodies_per_site, volunteers_per_site, witnesses_per_site;
        std::uint64_t tolerance;
        std::map<std::string, federation::site_plan> plans;
        std::map<std::string, std::vector<std::string>> script;
    };
    const parsed p = reading("federation scenario", [&] {
        parsed p;
        p.cycle = j.value("cycle", std::uint64_t{0});
        p.deadline = j.value("deadline", federation::tick{10});
        p.sites = require(j, "sites").get<std::vector<std::string>>();
        p.site_deadlines = j.value("site_deadlines", std::map<std::string, federation::tick>{});
        p.bodies_per_site = j.value("bodies_per_site", std::size_t{8});
        p.volunteers_per_site = j.value("volunteers_per_site", std::size_t{2});
        p.witnesses_per_site = j.value("witnesses_per_site", federation::default_witnesses_per_site);
        p.tolerance = j.value("testimony_tolerance", std::uint64_t{0});
        if (j.contains("plans")) {
            for (const auto& [site, plan] : j["plans"].items()) {
                p.plans[site] = {conduct_from(require(plan, "conduct").get<std::string>()), plan.value("amount", std::int64_t{0})};
            }
        }
        p.script = j.value("script", std::map<std::string, std::vector<std::string>>{});
        return p;
    });

    try {
        federation::federation_schedule schedule;
        if (p.site_deadlines.empty()) {
            schedule = federation::build_schedule(p.cycle, p.sites, p.deadline);
        } else {
            std::vector<std::pair<std::string, federation::tick>> pairs;
            for (const auto& s : p.sites) {
                const auto it = p.site_deadlines.find(s);
                pairs.emplace_back(s, it == p.site_deadlines.end() ? p.deadline : it->second);
            }
            schedule = federation::build_schedule(p.cycle, pairs);
        }

        federation::world w;
        std::vector<federation::volunteer> volunteers;
        for (const auto& site : p.sites) {
            for (std::size_t i = 1; i <= p.bodies_per_site; ++i) {
                const std::string id = site + "-b" + std::to_string(i);
                w.bodies.push_back({id, site, federation::behavior::honest, {}});
                if (i <= p.volunteers_per_site) volunteers.push_back({id, site});
            }
        }
        w.script = p.script;
        const auto assignments = federation::assign_cross_witnesses(seed_from_u64(ctx.seed(), "lottery"), volunteers,
                                                                    p.sites, p.witnesses_per_site);
        const auto outcome = federation::simulate_cycle(w, schedule, p.plans, assignments, seed_from_u64(ctx.seed(), "floor"));
        const auto report =
            federation::verify_cycle(outcome.records, schedule, outcome.commitments, outcome.reveals, {p.tolerance});

        ctx.write_json("bundle.json", federation::cycle_bundle(schedule, outcome, report));
        ctx.out << canonical_dump(json(report)) << "\n";
        print_cycle_summary(ctx, report);
        return report.all_passed() ? ok : verification_failed;
    } catch (const pop_error& e) {
        if (e.code() == errc::deadline_mismatch || e.code() == errc::body_duplication) return report_rejection(ctx, e);
        throw;
    }
}

int federation_verify(run_context& ctx, const std::string& bundle_path, std::uint64_t tolerance) {
    const json j = ctx.read_json(bundle_path);
    const auto schedule = reading("bundle", [&] { return require(j, "schedule").get<federation::federation_schedule>(); });
    const auto commitments = reading("bundle", [&] { return require(j, "commitments").get<std::vector<crypto::commitment>>(); });
    const auto records = reading("bundle", [&] { return require(j, "records").get<std::vector<federation::site_record>>(); });
    const auto reveals = reading("bundle", [&] { return require(j, "reveals").get<std::vector<federation::revelation>>(); });
    const auto report = federation::verify_cycle(records, schedule, commitments, reveals, {tolerance});
    ctx.write_json("report.json", report);
    ctx.out << canonical_dump(json(report)) << "\n";
    print_cycle_summary(ctx, report);
    return report.all_passed() ? ok : verification_failed;
}

// ---- sybilsim ----------------------------------------------------------------

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) parts.push_back(cur);
    return parts;
}

std::string fmt(double v, int precision) {
    std::ostringstream o;
    o << std::fixed << std::setprecision(precision) << v;
    return o.str();
}

std::string footnote_note(const sybilsim::scenario& s) {
    const double exact = sybilsim::lucky_fraction_exact(s.n_honest, s.n_sybil, s.group_size);
    const double f = static_cast<double>(s.n_sybil) / static_cast<double>(s.n_honest + s.n_sybil);
    std::ostringstream o;
    o << std::setprecision(3) << "group_size=" << s.group_size << ": exact all-Sybil rate " << exact << " at f=" << f
      << " (f^" << s.group_size - 1 << " = " << std::pow(f, s.group_size - 1) << ")";
    if (s.group_size == 4 && std::abs(f - 0.1) < 0.005) o << "; 10%^3 is 0.1%, so the often quoted '.01%' is ten times too small";
    return o.str();
}

int sybilsim_cmd(run_context& ctx,
                 const std::string& scenario_path,
                 const std::string& sweep,
                 const std::string& csv_path,
                 std::uint32_t replications,
                 unsigned threads) {
    const json j = ctx.read_json(scenario_path);
    auto base = reading("scenario", [&] { return j.get<sybilsim::scenario>(); });
    if (replications > 0) base.replications = replications;

    struct point {
        std::string label;
        sybilsim::scenario s;
    };
    std::vector<point> points;
    if (sweep.empty()) {
        points.push_back({"", base});
    } else {
        const auto eq = sweep.find('=');
        if (eq == std::string::npos || eq == 0) throw pop_error(errc::invalid_scenario, "--sweep expects key=v1,v2,...");
        const std::string key = sweep.substr(0, eq);
        for (const auto& v : split(sweep.substr(eq + 1), ',')) {
            point pt{key + "-" + v, base};
            sybilsim::set_field(pt.s, key, v);
            points.push_back(std::move(pt));
        }
        if (points.empty()) throw pop_error(errc::invalid_scenario, "--sweep lists no values");
    }
    for (const auto& pt : points) sybilsim::validate(pt.s);

    const fs::path csv_base = csv_path.empty() ? ctx.out_dir() / "sybilsim.csv" : fs::path(csv_path);
    json summary{{"master_seed", ctx.seed()}, {"points", json::array()}, {"notes", json::array()}};
    std::set<std::uint32_t> noted_groups;
    for (const auto& pt : points) {
        const auto res = sybilsim::run_scenario(pt.s, ctx.seed(), threads);
        fs::path csv = csv_base;
        if (!pt.label.empty()) {
            csv = csv_base.parent_path() / (csv_base.stem().string() + "_" + pt.label + csv_base.extension().string());
        }
        std::ostringstream body;
        sybilsim::write_csv(body, res);
        ctx.write_output(csv, body.str());

        const double exact = sybilsim::lucky_fraction_exact(pt.s.n_honest, pt.s.n_sybil, pt.s.group_size);
        summary["points"].push_back(json{{"label", pt.label},
                                         {"scenario", pt.s},
                                         {"csv", csv.filename().string()},
                                         {"advantage", res.advantage.mean},
                                         {"advantage_stderr", res.advantage.stderr_},
                                         {"lucky_fraction", res.lucky_fraction.mean},
                                         {"lucky_fraction_stderr", res.lucky_fraction.stderr_},
                                         {"lucky_fraction_exact", exact},
                                         {"final_share", res.final_share.mean}});
        if (pt.s.group_size >= 3 && noted_groups.insert(pt.s.group_size).second) summary["notes"].push_back(footnote_note(pt.s));
        ctx.err << (pt.label.empty() ? std::string("baseline") : pt.label) << ": advantage "
                << fmt(res.advantage.mean, 3) << " +/- " << fmt(res.advantage.stderr_, 3) << ", lucky fraction "
                << fmt(res.lucky_fraction.mean, 5) << " (exact " << fmt(exact, 5) << "), final share "
                << fmt(res.final_share.mean, 3) << "\n";
    }
    for (const auto& n : summary["notes"]) ctx.err << "note: " << n.get<std::string>() << "\n";
    ctx.write_json("summary.json", summary);
    ctx.out << canonical_dump(summary) << "\n";
    return ok;
}

// ---- apps --------------------------------------------------------------------

int apps_tag(run_context& ctx, const std::string& fixture_path) {
    const json j = ctx.read_json(fixture_path);
    const auto [roll, service, action, proofs] = reading("tag fixture", [&] {
        return std::tuple{require(j, "roll").get<ceremony::roll_list>(), require(j, "service").get<std::string>(),
                          require(j, "action").get<std::string>(), require(j, "proofs").get<std::vector<apps::tag_proof>>()};
    });
    std::set<crypto::group_element> seen;
    json results = json::array();
    for (const auto& p : proofs) {
        const auto r = apps::service_check(p, roll, service, action, seen);
        results.push_back(std::string(apps::to_string(r)));
        ctx.err << apps::to_string(r) << "\n";
    }
    const json out{{"service", service}, {"action", action}, {"results", results}};
    ctx.write_json("tag_results.json", out);
    ctx.out << canonical_dump(out) << "\n";
    return ok;
}

int apps_count(run_context& ctx, const std::string& fixture_path) {
    const json j = ctx.read_json(fixture_path);
    const auto roll = reading("count fixture", [&] { return require(j, "roll").get<ceremony::roll_list>(); });
    const auto kind = reading("count fixture", [&] { return require(j, "kind").get<std::string>(); });
    const auto target = reading("count fixture", [&] { return require(j, "target").get<std::string>(); });
    const auto fixture_id = j.value("fixture_id", fs::path(fixture_path).stem().string());

    std::set<std::string> accounts;
    std::size_t counted = 0;
    if (kind == "like") {
        const auto votes = reading("count fixture", [&] { return require(j, "votes").get<std::vector<apps::upvote>>(); });
        for (const auto& v : votes) accounts.insert(v.account_id);
        counted = apps::count_unique_upvotes(target, votes, roll);
    } else if (kind == "follow") {
        const auto votes = reading("count fixture", [&] { return require(j, "votes").get<std::vector<apps::follow>>(); });
        for (const auto& v : votes) accounts.insert(v.follower_account);
        counted = apps::count_unique_followers(target, votes, roll);
    } else {
        throw pop_error(errc::malformed_input, "count kind must be like or follow");
    }
    const apps::count_row row{fixture_id, static_cast<std::size_t>(j.value("persons", counted)), accounts.size(), counted};
    std::ostringstream csv;
    apps::write_count_csv(csv, std::span(&row, 1));
    ctx.write_output(ctx.out_dir() / "count.csv", csv.str());
    const json out{{"fixture_id", fixture_id}, {"kind", kind}, {"target", target}, {"accounts", accounts.size()}, {"counted", counted}};
    ctx.write_json("count.json", out);
    ctx.out << canonical_dump(out) << "\n";
    ctx.err << target << ": " << counted << " counted from " << accounts.size() << " accounts\n";
    return ok;
}

int apps_sortition(run_context& ctx, const std::string& fixture_path, std::optional<std::size_t> k_flag) {
    const json j = ctx.read_json(fixture_path);
    const auto roll = reading("sortition fixture", [&] { return require(j, "roll").get<ceremony::roll_list>(); });
    const seed32 beacon = j.contains("beacon") ? seed_from_json(j["beacon"], "beacon") : seed_from_u64(ctx.seed(), "beacon");
    const std::size_t k = k_flag ? *k_flag : reading("sortition fixture", [&] { return require(j, "k").get<std::size_t>(); });
    const auto result = apps::sortition_select(roll, beacon, k);
    ctx.write_json("sortition.json", result);
    ctx.out << canonical_dump(json(result)) << "\n";
    ctx.err << "selected";
    for (auto i : result.selected) ctx.err << ' ' << i;
    ctx.err << "\n";
    return ok;
}

// ---- replay --------------------------------------------------------------------

std::vector<std::string> strip_flags(const std::vector<std::string>& args, const std::set<std::string>& flags) {
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const auto& a = args[i];
        const auto eq = a.find('=');
        if (flags.contains(a)) {
            ++i;  // skip the value too
            continue;
        }
        if (eq != std::string::npos && flags.contains(a.substr(0, eq))) continue;
        kept.push_back(a);
    }
    return kept;
}

int replay(const std::string& manifest_path, const std::string& out_flag, std::ostream& out, std::ostream& err) {
    const json m = parse_json(read_file(manifest_path), manifest_path);
    const auto [args, seed, out_dir, csv, inputs, outputs] = reading("manifest", [&] {
        return std::tuple{require(m, "args").get<std::vector<std::string>>(), require(m, "master_seed").get<std::uint64_t>(),
                          require(m, "out_dir").get<std::string>(), m.value("csv", std::string{}), require(m, "inputs"),
                          require(m, "outputs")};
    });
    for (const auto& in : inputs) {
        const auto path = in.at("path").get<std::string>();
        if (hex_digest(read_file(path)) != in.at("sha256").get<std::string>()) {
            err << "replay: input " << path << " changed since the recorded run\n";
            return usage_error;
        }
    }

    const fs::path target = out_flag.empty() ? fs::path(out_dir) / "replay" : fs::path(out_flag);
    std::vector<std::string> rerun = args;
    rerun.insert(rerun.end(), {"--seed", std::to_string(seed), "--out", target.string()});
    if (!csv.empty()) rerun.insert(rerun.end(), {"--csv", (target / fs::path(csv).filename()).string()});

    std::ostringstream discard;
    const int code = run(rerun, discard, err);
    if (code == usage_error) return usage_error;

    const json fresh = parse_json(read_file(target / (require(m, "command").get<std::string>() + ".manifest.json")), "replayed manifest");
    json diff = json::array();
    bool identical = fresh.at("outputs").size() == outputs.size();
    for (const auto& o : outputs) {
        const auto it = std::find_if(fresh.at("outputs").begin(), fresh.at("outputs").end(),
                                     [&](const json& f) { return f.at("file") == o.at("file"); });
        const std::string actual = it == fresh.at("outputs").end() ? "" : it->at("sha256").get<std::string>();
        const bool same = actual == o.at("sha256").get<std::string>();
        identical = identical && same;
        diff.push_back(json{{"file", o.at("file")}, {"expected", o.at("sha256")}, {"actual", actual}, {"identical", same}});
    }
    out << canonical_dump(json{{"identical", identical}, {"outputs", diff}, {"replay_dir", target.string()}}) << "\n";
    err << "replay: " << (identical ? "outputs identical" : "outputs differ") << "\n";
    return identical ? ok : verification_failed;
}

}  // namespace

// ---- sample fixtures -------------------------------------------------------------

namespace {

ceremony::roll_list sample_roll(const std::string& event_id, std::uint64_t cycle, std::size_t n, const seed32& seed,
                                std::vector<crypto::person_key_pair>& keys) {
    keys.clear();
    ceremony::roll_list roll;
    roll.event_id = event_id;
    roll.cycle = cycle;
    for (std::size_t i = 0; i < n; ++i) {
        keys.push_back(crypto::keygen(crypto::transcript("pop/cli/sample").append(seed).append(event_id).append_u64(i).digest()));
        roll.tokens.push_back(keys.back().public_element);
    }
    roll.list_digest = ceremony::roll_digest(roll.event_id, roll.cycle, roll.tokens);
    return roll;
}

}  // namespace

std::vector<fs::path> write_sample_fixtures(const fs::path& dir, std::uint64_t seed) {
    fs::create_directories(dir);
    std::vector<fs::path> written;
    auto put = [&](const std::string& name, const json& j) {
        const fs::path p = dir / name;
        std::ofstream f(p, std::ios::binary | std::ios::trunc);
        f << canonical_dump(j) << "\n";
        written.push_back(p);
    };

    const json event{{"event_id", "hall-1/7"}, {"site_id", "hall-1"}, {"cycle", 7}, {"opening", 0}, {"deadline", 10}, {"attendees", 12}};
    put("ceremony_honest.json", event);
    auto with_attack = [&](json attack) {
        json e = event;
        e["attack"] = std::move(attack);
        return e;
    };
    put("ceremony_inflate.json", with_attack({{"kind", "inflate"}, {"count", 3}}));
    put("ceremony_double_scan.json", with_attack({{"kind", "double_scan"}, {"attendee", "p003"}}));
    put("ceremony_late_entry.json", with_attack({{"kind", "late_entry"}, {"attendee", "latecomer"}}));

    const json fed{{"cycle", 7}, {"deadline", 10}, {"sites", {"north", "south", "east"}}, {"bodies_per_site", 8}, {"volunteers_per_site", 2}};
    put("federation_honest.json", fed);
    json fab = fed;
    fab["plans"] = {{"east", {{"conduct", "fabricate"}, {"amount", 40}}}};
    put("federation_fabricated.json", fab);
    json inf = fed;
    inf["plans"] = {{"east", {{"conduct", "inflate"}, {"amount", 5}}}};
    put("federation_inflated.json", inf);
    json mis = fed;
    mis["site_deadlines"] = {{"east", 12}};
    put("federation_deadline_mismatch.json", mis);

    sybilsim::scenario base;
    put("sybilsim_baseline.json", base);
    sybilsim::scenario g4 = base;
    g4.group_size = 4;
    put("sybilsim_g4.json", g4);
    sybilsim::scenario grow = base;
    grow.reinvest = true;
    put("sybilsim_reinvest.json", grow);

    const seed32 s = seed_from_u64(seed, "samples");
    std::vector<crypto::person_key_pair> keys;

    // One person holding token 0 likes the post from three accounts.
    const auto like_roll = sample_roll("hall-1/7", 7, 5, s, keys);
    json votes = json::array();
    for (const char* account : {"acct-a", "acct-b", "acct-c"}) votes.push_back(apps::make_upvote(keys[0].secret, like_roll, "post-1", account));
    put("apps_like.json", json{{"fixture_id", "like-3-accounts-1-person"}, {"kind", "like"}, {"target", "post-1"}, {"persons", 1}, {"roll", like_roll}, {"votes", votes}});

    const auto first = apps::make_service_tag(keys[1].secret, like_roll, "forum.example", "signup");
    const auto other = apps::make_service_tag(keys[2].secret, like_roll, "forum.example", "signup");
    put("apps_tag_replay.json", json{{"roll", like_roll}, {"service", "forum.example"}, {"action", "signup"}, {"proofs", {first, other, first}}});

    const auto big_roll = sample_roll("assembly/7", 7, 20, s, keys);
    put("apps_sortition.json", json{{"roll", big_roll}, {"k", 5}, {"beacon", to_hex(seed_from_u64(seed, "beacon"))}});
    return written;
}

// ---- entry point -------------------------------------------------------------------

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Pseudonym-party proof-of-personhood toolkit and Sybil attack simulator", "popctl"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(tool_version));

    std::uint64_t seed = default_seed;
    std::string out_dir = default_out_dir;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "Master seed")->capture_default_str();
        sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
    };

    std::string input;
    auto* cer = app.add_subcommand("ceremony", "Run or verify a single pseudonym-party event");
    cer->require_subcommand(1);
    auto* cer_run = cer->add_subcommand("run", "Play an event scenario and emit its roll list");
    cer_run->add_option("scenario", input)->required();
    common(cer_run);
    auto* cer_verify = cer->add_subcommand("verify", "Verify a roll list against floor observations");
    cer_verify->add_option("fixture", input)->required();
    common(cer_verify);

    std::uint64_t tolerance = 0;
    auto* fed = app.add_subcommand("federation", "Synchronized multi-site cycles");
    fed->require_subcommand(1);
    auto* fed_sim = fed->add_subcommand("simulate", "Simulate and verify one cycle");
    fed_sim->add_option("scenario", input)->required();
    common(fed_sim);
    auto* fed_verify = fed->add_subcommand("verify", "Verify a cycle bundle");
    fed_verify->add_option("bundle", input)->required();
    fed_verify->add_option("--tolerance", tolerance, "Allowed testimony count difference");
    common(fed_verify);

    std::string sweep, csv;
    std::uint32_t replications = 0;
    unsigned threads = 0;
    auto* sim = app.add_subcommand("sybilsim", "Monte Carlo Sybil economics");
    sim->add_option("scenario", input)->required();
    sim->add_option("--sweep", sweep, "key=v1,v2,... one run per value");
    sim->add_option("--csv", csv, "CSV path (sweeps add a _key-value suffix)");
    sim->add_option("--replications", replications, "Override the scenario's replication count");
    sim->add_option("--threads", threads, "Worker threads (0 = all cores)");
    common(sim);

    std::optional<std::size_t> k_flag;
    auto* apps_cmd = app.add_subcommand("apps", "Unlinkable-tag applications");
    apps_cmd->require_subcommand(1);
    auto* tag = apps_cmd->add_subcommand("tag", "Check service tags for duplicates");
    tag->add_option("fixture", input)->required();
    common(tag);
    auto* count = apps_cmd->add_subcommand("count", "Count likes or followers once per person");
    count->add_option("fixture", input)->required();
    common(count);
    auto* sort = apps_cmd->add_subcommand("sortition", "Select k tokens from a roll with a beacon");
    sort->add_option("fixture", input)->required();
    sort->add_option("-k", k_flag, "Override the fixture's k");
    common(sort);

    std::string replay_out;
    auto* rep = app.add_subcommand("replay", "Rerun a command from its manifest and compare outputs");
    rep->add_option("manifest", input)->required();
    rep->add_option("--out", replay_out, "Replay directory (default: <recorded out>/replay)");

    std::string fixtures_dir;
    auto* fix = app.add_subcommand("fixtures", "Write the sample scenarios and fixtures");
    fix->add_option("dir", fixtures_dir)->required();
    fix->add_option("--seed", seed)->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : usage_error;
    }

    try {
        if (*rep) return replay(input, replay_out, out, err);
        if (*fix) {
            for (const auto& p : write_sample_fixtures(fixtures_dir, seed)) out << p.string() << "\n";
            return ok;
        }

        std::string name;
        std::function<int(run_context&)> body;
        if (*cer_run) {
            name = "ceremony-run";
            body = [&](run_context& c) { return ceremony_run(c, input); };
        } else if (*cer_verify) {
            name = "ceremony-verify";
            body = [&](run_context& c) { return ceremony_verify(c, input); };
        } else if (*fed_sim) {
            name = "federation-simulate";
            body = [&](run_context& c) { return federation_simulate(c, input); };
        } else if (*fed_verify) {
            name = "federation-verify";
            body = [&](run_context& c) { return federation_verify(c, input, tolerance); };
        } else if (*sim) {
            name = "sybilsim";
            body = [&](run_context& c) { return sybilsim_cmd(c, input, sweep, csv, replications, threads); };
        } else if (*tag) {
            name = "apps-tag";
            body = [&](run_context& c) { return apps_tag(c, input); };
        } else if (*count) {
            name = "apps-count";
            body = [&](run_context& c) { return apps_count(c, input); };
        } else {
            name = "apps-sortition";
            body = [&](run_context& c) { return apps_sortition(c, input, k_flag); };
        }

        run_context ctx(name, strip_flags(args, {"--seed", "--out", "--csv"}), out_dir, seed, out, err);
        ctx.set_csv(csv);
        const int code = body(ctx);
        ctx.write_manifest();
        return code;
    } catch (const pop_error& e) {
        err << "error: " << e.what() << "\n";
        return usage_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return usage_error;
    }
}

}  // namespace pop::cli
