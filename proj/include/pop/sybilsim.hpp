#pragma once

// Monte Carlo model of a Sybil attacker against threshold-verification
// proof-of-personhood schemes, which assign *identities* to small
// verification groups every cycle and keep an identity verified while it
// attends often enough.
//
// Attendance rule. An identity's attendance history holds its last W
// honest-witnessed meetings (groups with at least one honest member); it is
// verified while at least ceil(theta * W) of those were attended. A meeting
// whose members are all the attacker's Sybils is a "lucky" group: every
// member is verified for that cycle at zero cost, and nothing is added to the
// history because no honest participant observed it.
//
// Attacker policy. For a Sybil in an honest-witnessed group, hire one minion
// exactly when skipping would leave fewer than ceil(theta * W) attendances in
// the trailing window. One minion covers one identity per cycle.
//
// Randomness. Each replication r draws from std::mt19937_64 seeded with
// std::seed_seq{lo32(seed), hi32(seed), lo32(r), hi32(r), 0x5eed}; bounded integers use
// rejection sampling on the raw 64-bit output. Both the engine and seed_seq are
// fully specified by the C++ standard, so a seed reproduces across platforms.

#include <pop/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace pop::sybilsim {

class rng_stream {
public:
    rng_stream(std::uint64_t master_seed, std::uint64_t substream);

    std::uint64_t next() { return engine_(); }
    std::uint64_t below(std::uint64_t bound);
    double unit();  // [0, 1)

private:
    std::mt19937_64 engine_;
};

struct scenario {
    std::uint64_t n_honest = 9000;
    std::uint64_t n_sybil = 1000;
    std::uint32_t group_size = 2;
    double threshold = 0.5;
    std::uint32_t window = 10;
    double reward = 1.0;
    double minion_cost = 1.0;
    double creation_cost = 5.0;
    bool reinvest = false;
    std::uint32_t cycles = 200;
    std::uint32_t replications = 20;
    // Saturation point for reinvestment; 0 means 10 x the initial population.
    std::uint64_t max_sybils = 0;
    // Initial Sybils start with a compliant history at a random phase; new
    // ones created by reinvestment always start empty.
    bool established_start = true;
};

// Throws pop_error(invalid_scenario).
void validate(const scenario& s);
std::uint32_t required_attendance(double threshold, std::uint32_t window);
std::uint64_t sybil_cap(const scenario& s);

void to_json(json& j, const scenario& s);
void from_json(const json& j, scenario& s);

// Assigns one scenario field from its textual value (used by --sweep).
void set_field(scenario& s, const std::string& key, const std::string& value);

// Uniform partition of identities 0..n-1 into groups of g; the n mod g
// leftover identities join the last groups, one each, so no group is smaller than g.
struct group_assignment {
    std::vector<std::uint32_t> members;
    std::vector<std::uint32_t> offsets;  // group i is members[offsets[i], offsets[i+1])

    std::size_t group_count() const noexcept { return offsets.empty() ? 0 : offsets.size() - 1; }
    std::span<const std::uint32_t> group(std::size_t i) const {
        return std::span(members).subspan(offsets[i], offsets[i + 1] - offsets[i]);
    }
};

group_assignment assign_groups(std::uint32_t n_identities, std::uint32_t g, rng_stream& rng);

// Probability that a given Sybil's group of g is entirely Sybil:
// prod_{i=1}^{g-1} (S - i) / (H + S - i).
double lucky_fraction_exact(std::uint64_t honest, std::uint64_t sybil, std::uint32_t g);

// Trailing history of honest-witnessed meetings, newest in bit 0.
struct attendance_state {
    std::vector<std::uint64_t> history;  // indexed by Sybil ordinal
};

struct minion_plan {
    std::uint64_t lucky_sybils = 0;
    std::uint64_t exposed_sybils = 0;
    std::uint64_t minions = 0;
    std::uint64_t verified_sybils = 0;
};

// Identities below `first_sybil` are honest; Sybil ordinal = id - first_sybil.
// Updates the attendance histories in place.
minion_plan attacker_cover(const group_assignment& groups,
                           std::uint32_t first_sybil,
                           attendance_state& attendance,
                           double threshold,
                           std::uint32_t window);

struct economy_state {
    std::uint64_t sybils = 0;
    double income = 0;
    double cost = 0;
    double profit = 0;
    std::uint64_t new_sybils = 0;
};

// income = verified * R, cost = minions * C, new Sybils = floor(max(profit, 0) / creation_cost)
// when reinvesting, clipped at `cap`. Losses never remove Sybils.
economy_state economy_step(std::uint64_t sybils,
                           const minion_plan& plan,
                           double reward,
                           double minion_cost,
                           double creation_cost,
                           bool reinvest,
                           std::uint64_t cap);

struct cycle_metrics {
    std::uint32_t cycle = 0;
    double sybil_count = 0;
    double sybil_share = 0;
    double lucky_fraction = 0;
    double minions_hired = 0;
    double exposed_sybils = 0;
    double verified_sybils = 0;
    double income = 0;
    double cost = 0;
    double profit = 0;
    double advantage = 0;  // income / cost; 1 when there is no attacker
    double new_sybils = 0;
};

struct replication_result {
    std::vector<cycle_metrics> cycles;
    double total_income = 0;
    double total_cost = 0;
    double advantage = 1;  // total income / total cost
    double final_share = 0;
};

// Simulates one replication on its own substream.
replication_result run_replication(const scenario& s, std::uint64_t master_seed, std::uint32_t replication);

struct metric_summary {
    double mean = 0;
    double stderr_ = 0;
};

struct cycle_aggregate {
    std::uint32_t cycle = 0;
    metric_summary sybil_count, sybil_share, lucky_fraction, minions, income, cost, advantage;
};

struct sim_result {
    scenario config;
    std::uint64_t master_seed = 0;
    std::vector<cycle_aggregate> per_cycle;
    metric_summary advantage;       // over replications of total income / total cost
    metric_summary lucky_fraction;  // over replications of the per-cycle mean
    metric_summary final_share;
    std::vector<replication_result> replications;
};

// Replications run on up to `threads` workers (0 = hardware concurrency).
// The result is bit-identical for a given scenario and seed whatever the thread count.
sim_result run_scenario(const scenario& s, std::uint64_t master_seed, unsigned threads = 0);

// Columns: cycle, sybil_count, sybil_share, lucky_fraction, minions, income,
// cost, advantage, then the same metrics suffixed _stderr.
void write_csv(std::ostream& out, const sim_result& result);

struct plateau_options {
    std::uint32_t window = 10;
    std::uint32_t warmup_cycles = 30;
    std::uint32_t measure_cycles = 100;
    std::uint32_t replications = 4;
};

struct plateau_point {
    std::uint64_t sybils = 0;
    double minions = 0;  // steady-state mean per cycle
    double minions_stderr = 0;
    double exposed = 0;  // Sybils in honest-witnessed groups per cycle
};

std::vector<plateau_point> plateau_curve(std::uint64_t honest,
                                         double threshold,
                                         std::uint32_t g,
                                         std::span<const std::uint64_t> sybil_values,
                                         std::uint64_t seed,
                                         const plateau_options& options = {});

// One verification session: `human` stands in for `identity` at time `slot`.
struct session {
    std::uint32_t identity = 0;
    std::uint32_t human = 0;
    std::uint64_t slot = 0;
};

struct timeshift_result {
    std::uint32_t verified_identities = 0;
    std::vector<session> sessions;
};

// Async schemes let participants pick their own times, so sessions never
// collide. Synchronized schemes put every identity into one of
// `slots_per_cycle` shared slots, and a human can be in only one session per slot.
timeshift_result timeshift_demo(std::uint32_t m_identities, std::uint32_t humans, bool async, std::uint32_t slots_per_cycle);

}  // namespace pop::sybilsim
