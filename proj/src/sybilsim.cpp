#include <pop/error.hpp>
#include <pop/sybilsim.hpp>

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

namespace pop::sybilsim {

namespace {

constexpr std::uint32_t substream_tag = 0x5eed;

std::seed_seq make_seed_seq(std::uint64_t master_seed, std::uint64_t substream) {
    return std::seed_seq{static_cast<std::uint32_t>(master_seed),
                         static_cast<std::uint32_t>(master_seed >> 32),
                         static_cast<std::uint32_t>(substream),
                         static_cast<std::uint32_t>(substream >> 32),
                         substream_tag};
}

[[noreturn]] void bad(const std::string& what) { throw pop_error(errc::invalid_scenario, what); }

std::uint64_t window_mask(std::uint32_t window) {
    return window >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << window) - 1;
}

metric_summary summarize(const std::vector<double>& xs) {
    metric_summary m;
    if (xs.empty()) return m;
    double sum = 0;
    for (double x : xs) sum += x;
    m.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0;
        for (double x : xs) ss += (x - m.mean) * (x - m.mean);
        const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
        m.stderr_ = sd / std::sqrt(static_cast<double>(xs.size()));
    }
    return m;
}

double ratio_or_one(double income, double cost) {
    if (cost > 0) return income / cost;
    return income > 0 ? std::numeric_limits<double>::infinity() : 1.0;
}

}  // namespace

rng_stream::rng_stream(std::uint64_t master_seed, std::uint64_t substream) {
    auto seq = make_seed_seq(master_seed, substream);
    engine_.seed(seq);
}

std::uint64_t rng_stream::below(std::uint64_t bound) {
    if (bound == 0) return 0;
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t x = engine_();
        if (x >= threshold) return x % bound;
    }
}

double rng_stream::unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint32_t required_attendance(double threshold, std::uint32_t window) {
    // Guard against 0.3 * 10 = 3.0000000000000004 style rounding.
    const double need = threshold * static_cast<double>(window);
    return static_cast<std::uint32_t>(std::ceil(need - 1e-9));
}

void validate(const scenario& s) {
    if (s.group_size < 2) bad("group_size must be at least 2");
    if (!(s.threshold > 0.0 && s.threshold <= 1.0)) bad("threshold must lie in (0, 1]");
    if (s.window < 1 || s.window > 64) bad("window must lie in [1, 64]");
    if (s.n_honest + s.n_sybil < s.group_size) bad("fewer identities than one group");
    if (s.replications < 1) bad("replications must be at least 1");
    if (s.reward < 0 || s.minion_cost < 0) bad("reward and minion_cost must be non-negative");
    if (s.reinvest && !(s.creation_cost > 0)) bad("creation_cost must be positive when reinvesting");
    if (sybil_cap(s) < s.n_sybil) bad("max_sybils below the initial Sybil count");
    if (s.n_honest + sybil_cap(s) > std::numeric_limits<std::uint32_t>::max()) bad("population too large");
}

std::uint64_t sybil_cap(const scenario& s) {
    if (s.max_sybils != 0) return s.max_sybils;
    return 10 * (s.n_honest + s.n_sybil);
}

void to_json(json& j, const scenario& s) {
    j = json{{"n_honest", s.n_honest},
             {"n_sybil", s.n_sybil},
             {"group_size", s.group_size},
             {"threshold", s.threshold},
             {"window", s.window},
             {"reward", s.reward},
             {"minion_cost", s.minion_cost},
             {"creation_cost", s.creation_cost},
             {"reinvest", s.reinvest},
             {"cycles", s.cycles},
             {"replications", s.replications},
             {"max_sybils", s.max_sybils},
             {"established_start", s.established_start}};
}

void from_json(const json& j, scenario& s) {
    if (!j.is_object()) throw pop_error(errc::malformed_input, "scenario must be an object");
    scenario out;
    try {
        out.n_honest = j.value("n_honest", out.n_honest);
        out.n_sybil = j.value("n_sybil", out.n_sybil);
        out.group_size = j.value("group_size", out.group_size);
        out.threshold = j.value("threshold", out.threshold);
        out.window = j.value("window", out.window);
        out.reward = j.value("reward", out.reward);
        out.minion_cost = j.value("minion_cost", out.minion_cost);
        out.creation_cost = j.value("creation_cost", out.creation_cost);
        out.reinvest = j.value("reinvest", out.reinvest);
        out.cycles = j.value("cycles", out.cycles);
        out.replications = j.value("replications", out.replications);
        out.max_sybils = j.value("max_sybils", out.max_sybils);
        out.established_start = j.value("established_start", out.established_start);
    } catch (const nlohmann::json::exception& e) {
        throw pop_error(errc::malformed_input, std::string("scenario: ") + e.what());
    }
    s = out;
}

void set_field(scenario& s, const std::string& key, const std::string& value) {
    json patch;
    to_json(patch, s);
    if (!patch.contains(key)) bad("unknown scenario field '" + key + "'");
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error&) {
        bad("cannot parse value '" + value + "' for " + key);
    }
    if (patch[key].is_number_unsigned() && parsed.is_number_integer() && parsed.get<std::int64_t>() < 0)
        bad(key + " must be non-negative");
    if (patch[key].is_number() != parsed.is_number() || patch[key].is_boolean() != parsed.is_boolean())
        bad("wrong type for " + key);
    patch[key] = parsed;
    from_json(patch, s);
}

group_assignment assign_groups(std::uint32_t n_identities, std::uint32_t g, rng_stream& rng) {
    group_assignment out;
    out.members.resize(n_identities);
    for (std::uint32_t i = 0; i < n_identities; ++i) out.members[i] = i;
    for (std::uint32_t i = n_identities; i > 1; --i) {
        const auto j = static_cast<std::uint32_t>(rng.below(i));
        std::swap(out.members[i - 1], out.members[j]);
    }
    const std::uint32_t groups = g == 0 ? 0 : n_identities / g;
    if (groups == 0) {
        out.offsets = {0, n_identities};
        return out;
    }
    std::vector<std::uint32_t> sizes(groups, g);
    const std::uint32_t leftover = n_identities % g;
    for (std::uint32_t k = 0; k < leftover; ++k) ++sizes[groups - 1 - (k % groups)];
    out.offsets.reserve(groups + 1);
    out.offsets.push_back(0);
    for (auto sz : sizes) out.offsets.push_back(out.offsets.back() + sz);
    return out;
}

double lucky_fraction_exact(std::uint64_t honest, std::uint64_t sybil, std::uint32_t g) {
    if (g <= 1) return 1.0;
    if (sybil < g) return 0.0;
    double p = 1.0;
    const double total = static_cast<double>(honest + sybil);
    for (std::uint32_t i = 1; i < g; ++i)
        p *= (static_cast<double>(sybil) - i) / (total - i);
    return p;
}

minion_plan attacker_cover(const group_assignment& groups,
                           std::uint32_t first_sybil,
                           attendance_state& attendance,
                           double threshold,
                           std::uint32_t window) {
    minion_plan plan;
    const std::uint32_t need = required_attendance(threshold, window);
    const std::uint64_t mask = window_mask(window);
    const std::uint64_t prior_mask = mask >> 1;  // previous W-1 meetings after the shift

    for (std::size_t gi = 0; gi < groups.group_count(); ++gi) {
        const auto members = groups.group(gi);
        const bool all_sybil =
            std::all_of(members.begin(), members.end(), [&](std::uint32_t id) { return id >= first_sybil; });
        for (std::uint32_t id : members) {
            if (id < first_sybil) continue;
            if (all_sybil) {
                ++plan.lucky_sybils;
                ++plan.verified_sybils;
                continue;
            }
            ++plan.exposed_sybils;
            std::uint64_t& h = attendance.history[id - first_sybil];
            const auto kept = static_cast<std::uint32_t>(std::popcount(h & prior_mask));
            const bool hire = kept < need;
            h = ((h << 1) | (hire ? 1u : 0u)) & mask;
            if (hire) ++plan.minions;
            if (std::cmp_greater_equal(std::popcount(h), need)) ++plan.verified_sybils;
        }
    }
    return plan;
}

economy_state economy_step(std::uint64_t sybils,
                           const minion_plan& plan,
                           double reward,
                           double minion_cost,
                           double creation_cost,
                           bool reinvest,
                           std::uint64_t cap) {
    economy_state st;
    st.income = static_cast<double>(plan.verified_sybils) * reward;
    st.cost = static_cast<double>(plan.minions) * minion_cost;
    st.profit = st.income - st.cost;
    if (reinvest && st.profit > 0 && creation_cost > 0) {
        const double affordable = std::floor(st.profit / creation_cost);
        const std::uint64_t room = cap > sybils ? cap - sybils : 0;
        st.new_sybils = affordable >= static_cast<double>(room) ? room : static_cast<std::uint64_t>(affordable);
    }
    st.sybils = sybils + st.new_sybils;
    return st;
}

replication_result run_replication(const scenario& s, std::uint64_t master_seed, std::uint32_t replication) {
    validate(s);
    rng_stream rng(master_seed, replication);
    const std::uint64_t cap = sybil_cap(s);
    const std::uint32_t need = required_attendance(s.threshold, s.window);
    const std::uint64_t mask = window_mask(s.window);

    attendance_state att;
    att.history.resize(s.n_sybil, 0);
    if (s.established_start && need > 0) {
        // A contiguous block of `need` attendances at a random rotation.
        const std::uint64_t block = need >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << need) - 1;
        for (auto& h : att.history) {
            const auto rot = static_cast<int>(rng.below(s.window));
            std::uint64_t v = block;
            for (int r = 0; r < rot; ++r) v = ((v << 1) | (v >> (s.window - 1))) & mask;
            h = v;
        }
    }

    replication_result out;
    out.cycles.reserve(s.cycles);
    std::uint64_t sybils = s.n_sybil;
    const auto first_sybil = static_cast<std::uint32_t>(s.n_honest);
    for (std::uint32_t c = 0; c < s.cycles; ++c) {
        cycle_metrics m;
        m.cycle = c;
        m.sybil_count = static_cast<double>(sybils);
        const double total = static_cast<double>(s.n_honest + sybils);
        m.sybil_share = total > 0 ? static_cast<double>(sybils) / total : 0.0;

        minion_plan plan;
        if (sybils > 0) {
            const auto groups = assign_groups(static_cast<std::uint32_t>(s.n_honest + sybils), s.group_size, rng);
            plan = attacker_cover(groups, first_sybil, att, s.threshold, s.window);
        }
        const auto econ =
            economy_step(sybils, plan, s.reward, s.minion_cost, s.creation_cost, s.reinvest, cap);

        m.lucky_fraction = sybils > 0 ? static_cast<double>(plan.lucky_sybils) / static_cast<double>(sybils) : 0.0;
        m.minions_hired = static_cast<double>(plan.minions);
        m.exposed_sybils = static_cast<double>(plan.exposed_sybils);
        m.verified_sybils = static_cast<double>(plan.verified_sybils);
        m.income = econ.income;
        m.cost = econ.cost;
        m.profit = econ.profit;
        m.advantage = ratio_or_one(econ.income, econ.cost);
        m.new_sybils = static_cast<double>(econ.new_sybils);
        out.total_income += econ.income;
        out.total_cost += econ.cost;
        out.cycles.push_back(m);

        sybils = econ.sybils;
        att.history.resize(sybils, 0);
    }
    out.advantage = ratio_or_one(out.total_income, out.total_cost);
    const double total = static_cast<double>(s.n_honest + sybils);
    out.final_share = total > 0 ? static_cast<double>(sybils) / total : 0.0;
    return out;
}

sim_result run_scenario(const scenario& s, std::uint64_t master_seed, unsigned threads) {
    validate(s);
    sim_result res;
    res.config = s;
    res.master_seed = master_seed;
    res.replications.resize(s.replications);

    unsigned workers = threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, s.replications);
    std::atomic<std::uint32_t> next{0};
    auto work = [&] {
        for (std::uint32_t r = next++; r < s.replications; r = next++)
            res.replications[r] = run_replication(s, master_seed, r);
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }

    // Aggregation walks replications in index order, so the floating-point
    // sums do not depend on which worker finished first.
    const std::size_t n = res.replications.size();
    std::vector<double> col(n);
    auto across = [&](std::uint32_t c, auto field) {
        for (std::size_t r = 0; r < n; ++r) col[r] = res.replications[r].cycles[c].*field;
        return summarize(col);
    };
    res.per_cycle.resize(s.cycles);
    for (std::uint32_t c = 0; c < s.cycles; ++c) {
        auto& a = res.per_cycle[c];
        a.cycle = c;
        a.sybil_count = across(c, &cycle_metrics::sybil_count);
        a.sybil_share = across(c, &cycle_metrics::sybil_share);
        a.lucky_fraction = across(c, &cycle_metrics::lucky_fraction);
        a.minions = across(c, &cycle_metrics::minions_hired);
        a.income = across(c, &cycle_metrics::income);
        a.cost = across(c, &cycle_metrics::cost);
        a.advantage = across(c, &cycle_metrics::advantage);
    }
    for (std::size_t r = 0; r < n; ++r) col[r] = res.replications[r].advantage;
    res.advantage = summarize(col);
    for (std::size_t r = 0; r < n; ++r) col[r] = res.replications[r].final_share;
    res.final_share = summarize(col);
    for (std::size_t r = 0; r < n; ++r) {
        double sum = 0;
        for (const auto& m : res.replications[r].cycles) sum += m.lucky_fraction;
        col[r] = s.cycles > 0 ? sum / s.cycles : 0.0;
    }
    res.lucky_fraction = summarize(col);
    return res;
}

namespace {

void put_number(std::ostream& out, double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, end - buf);
}

}  // namespace

void write_csv(std::ostream& out, const sim_result& result) {
    out << "cycle,sybil_count,sybil_share,lucky_fraction,minions,income,cost,advantage,"
           "sybil_count_stderr,sybil_share_stderr,lucky_fraction_stderr,minions_stderr,"
           "income_stderr,cost_stderr,advantage_stderr\n";
    for (const auto& a : result.per_cycle) {
        const metric_summary* cols[] = {&a.sybil_count, &a.sybil_share, &a.lucky_fraction, &a.minions,
                                        &a.income,      &a.cost,        &a.advantage};
        out << a.cycle;
        for (const auto* m : cols) {
            out << ',';
            put_number(out, m->mean);
        }
        for (const auto* m : cols) {
            out << ',';
            put_number(out, m->stderr_);
        }
        out << '\n';
    }
}

std::vector<plateau_point> plateau_curve(std::uint64_t honest,
                                         double threshold,
                                         std::uint32_t g,
                                         std::span<const std::uint64_t> sybil_values,
                                         std::uint64_t seed,
                                         const plateau_options& options) {
    std::vector<plateau_point> out;
    out.reserve(sybil_values.size());
    for (std::size_t i = 0; i < sybil_values.size(); ++i) {
        scenario s;
        s.n_honest = honest;
        s.n_sybil = sybil_values[i];
        s.group_size = g;
        s.threshold = threshold;
        s.window = options.window;
        s.reinvest = false;
        s.cycles = options.warmup_cycles + options.measure_cycles;
        s.replications = options.replications;
        // Distinct seed per curve point so neighbouring points are independent.
        const auto res = run_scenario(s, seed ^ (0x9e3779b97f4a7c15ULL * (i + 1)));

        std::vector<double> minions, exposed;
        for (const auto& rep : res.replications) {
            double m = 0, e = 0;
            for (std::uint32_t c = options.warmup_cycles; c < s.cycles; ++c) {
                m += rep.cycles[c].minions_hired;
                e += rep.cycles[c].exposed_sybils;
            }
            const double denom = std::max<std::uint32_t>(options.measure_cycles, 1);
            minions.push_back(m / denom);
            exposed.push_back(e / denom);
        }
        const auto ms = summarize(minions);
        out.push_back({sybil_values[i], ms.mean, ms.stderr_, summarize(exposed).mean});
    }
    return out;
}

timeshift_result timeshift_demo(std::uint32_t m_identities, std::uint32_t humans, bool async, std::uint32_t slots_per_cycle) {
    timeshift_result out;
    if (humans == 0 || m_identities == 0) return out;
    if (async) {
        // Each identity's verification happens at a time of the participant's
        // choosing, so one human can walk through all of them in turn.
        for (std::uint32_t i = 0; i < m_identities; ++i) out.sessions.push_back({i, i % humans, i / humans});
        out.verified_identities = m_identities;
        return out;
    }
    const std::uint32_t slots = std::max<std::uint32_t>(slots_per_cycle, 1);
    std::vector<std::uint32_t> busy(slots, 0);
    for (std::uint32_t i = 0; i < m_identities; ++i) {
        const std::uint32_t slot = i % slots;
        if (busy[slot] >= humans) continue;  // every human is already in a session at this slot
        out.sessions.push_back({i, busy[slot], slot});
        ++busy[slot];
        ++out.verified_identities;
    }
    return out;
}

}  // namespace pop::sybilsim
