#include <doctest.h>
#include <oracles.hpp>

#include <pop/error.hpp>
#include <pop/sybilsim.hpp>

#include <cmath>
#include <set>
#include <sstream>

using namespace pop;
using namespace pop::sybilsim;

namespace {

group_assignment fixed_groups(std::vector<std::vector<std::uint32_t>> groups) {
    group_assignment a;
    a.offsets.push_back(0);
    for (const auto& g : groups) {
        a.members.insert(a.members.end(), g.begin(), g.end());
        a.offsets.push_back(static_cast<std::uint32_t>(a.members.size()));
    }
    return a;
}

scenario small(std::uint32_t cycles = 40, std::uint32_t reps = 4) {
    scenario s;
    s.n_honest = 900;
    s.n_sybil = 100;
    s.cycles = cycles;
    s.replications = reps;
    return s;
}

}  // namespace

TEST_CASE("rng streams") {
    rng_stream a(7, 0), b(7, 0), c(7, 1), d(8, 0);
    const auto x = a.next();
    CHECK(x == b.next());
    CHECK(x != c.next());
    CHECK(x != d.next());
    for (int i = 0; i < 1000; ++i) {
        CHECK(a.below(13) < 13);
        const double u = a.unit();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("assign_groups partitions identities") {
    rng_stream rng(1, 0);
    SUBCASE("n = 10, g = 2") {
        const auto a = assign_groups(10, 2, rng);
        REQUIRE(a.group_count() == 5);
        for (std::size_t i = 0; i < 5; ++i) CHECK(a.group(i).size() == 2);
        CHECK(std::set(a.members.begin(), a.members.end()).size() == 10);
    }
    SUBCASE("n = 9, g = 2 leaves one triple") {
        const auto a = assign_groups(9, 2, rng);
        REQUIRE(a.group_count() == 4);
        std::multiset<std::size_t> sizes;
        for (std::size_t i = 0; i < 4; ++i) sizes.insert(a.group(i).size());
        CHECK(sizes == std::multiset<std::size_t>{2, 2, 2, 3});
    }
    SUBCASE("n = 11, g = 4 never yields a group smaller than g") {
        const auto a = assign_groups(11, 4, rng);
        REQUIRE(a.group_count() == 2);
        CHECK(a.group(0).size() + a.group(1).size() == 11);
        CHECK(a.group(0).size() >= 4);
        CHECK(a.group(1).size() >= 4);
    }
}

TEST_CASE("two given identities share a pair with probability 1/(n-1)") {
    rng_stream rng(3, 0);
    const int draws = 10000;
    int together = 0;
    for (int d = 0; d < draws; ++d) {
        const auto a = assign_groups(10, 2, rng);
        for (std::size_t i = 0; i < a.group_count(); ++i) {
            const auto g = a.group(i);
            if ((g[0] == 0 && g[1] == 1) || (g[0] == 1 && g[1] == 0)) ++together;
        }
    }
    CHECK(oracle::within_binomial_sigma(together, draws, 1.0 / 9.0));
}

TEST_CASE("lucky fraction formula matches counting") {
    for (std::uint64_t h : {1ull, 10ull, 900ull, 9000ull})
        for (std::uint64_t s : {0ull, 1ull, 2ull, 5ull, 100ull, 1000ull})
            for (unsigned g : {2u, 3u, 4u}) {
                INFO("H=" << h << " S=" << s << " g=" << g);
                CHECK(lucky_fraction_exact(h, s, g) == doctest::Approx(oracle::lucky_by_counting(h, s, g)).epsilon(1e-12));
            }
    CHECK(lucky_fraction_exact(9000, 0, 2) == 0.0);
}

TEST_CASE("sampled lucky fraction agrees with the exact value") {
    const std::uint64_t total = 2000;
    std::uint64_t sub = 0;
    for (double f : {0.05, 0.1, 0.3}) {
        for (std::uint32_t g : {2u, 3u, 4u}) {
            const auto s = static_cast<std::uint64_t>(f * total);
            // Use group counts divisible by g so every group has exactly g members.
            const auto n = static_cast<std::uint32_t>(total - total % g);
            const auto hh = static_cast<std::uint32_t>(n - s);
            rng_stream rng(99, sub++);
            std::uint64_t lucky = 0, trials = 0;
            while (trials < 100000) {
                const auto a = assign_groups(n, g, rng);
                for (std::size_t i = 0; i < a.group_count(); ++i) {
                    const auto grp = a.group(i);
                    const bool all = std::all_of(grp.begin(), grp.end(), [&](auto id) { return id >= hh; });
                    for (auto id : grp)
                        if (id >= hh && all) ++lucky;
                }
                trials += s;
            }
            const double p = lucky_fraction_exact(hh, s, g);
            INFO("f=" << f << " g=" << g << " observed " << double(lucky) / double(trials) << " exact " << p);
            // Sybils in one assignment are correlated, so allow a looser spread than binomial.
            const double se = std::sqrt(p * (1 - p) / static_cast<double>(trials)) * std::sqrt(static_cast<double>(g));
            CHECK(std::abs(double(lucky) / double(trials) - p) <= 3 * se + 1e-12);
        }
    }
}

TEST_CASE("attacker_cover") {
    SUBCASE("an all-Sybil pair is verified without minions") {
        attendance_state att{{0, 0}};
        const auto plan = attacker_cover(fixed_groups({{0, 1}, {2, 3}}), 2, att, 0.5, 10);
        CHECK(plan.lucky_sybils == 2);
        CHECK(plan.verified_sybils == 2);
        CHECK(plan.minions == 0);
        CHECK(plan.exposed_sybils == 0);
        CHECK(att.history == std::vector<std::uint64_t>{0, 0});
    }
    SUBCASE("W = 2, theta = 0.5: a fresh Sybil hires every other cycle") {
        attendance_state att{{0}};
        std::vector<std::uint64_t> hires;
        for (int c = 0; c < 8; ++c) hires.push_back(attacker_cover(fixed_groups({{0, 1}}), 1, att, 0.5, 2).minions);
        CHECK(hires == std::vector<std::uint64_t>{1, 0, 1, 0, 1, 0, 1, 0});
    }
    SUBCASE("verified when the window holds enough attendances") {
        attendance_state att{{0}};
        std::uint64_t verified = 0;
        for (int c = 0; c < 20; ++c) verified += attacker_cover(fixed_groups({{0, 1}}), 1, att, 0.5, 10).verified_sybils;
        // A fresh identity needs five attended meetings before it counts.
        CHECK(verified == 16);
    }
}

TEST_CASE("long-run minions for the reference scenario") {
    scenario s;
    s.cycles = 120;
    const auto r = run_replication(s, 11, 0);
    double minions = 0;
    int n = 0;
    for (std::size_t c = 20; c < r.cycles.size(); ++c, ++n) minions += r.cycles[c].minions_hired;
    minions /= n;
    // theta of the exposed Sybils: 0.5 * 1000 * (1 - 1/10).
    CHECK(minions == doctest::Approx(450).epsilon(0.05));
}

TEST_CASE("economy_step") {
    minion_plan plan;
    plan.verified_sybils = 1000;
    plan.minions = 450;
    const auto e = economy_step(1000, plan, 1.0, 1.0, 5.0, false, 10000);
    CHECK(e.income == 1000);
    CHECK(e.cost == 450);
    CHECK(e.profit == 550);
    CHECK(e.new_sybils == 0);
    CHECK(e.sybils == 1000);

    const auto grow = economy_step(1000, plan, 1.0, 1.0, 5.0, true, 10000);
    CHECK(grow.new_sybils == 110);
    CHECK(grow.sybils == 1110);

    plan.minions = 2000;
    const auto loss = economy_step(1000, plan, 1.0, 1.0, 5.0, true, 10000);
    CHECK(loss.profit == -1000);
    CHECK(loss.sybils == 1000);

    plan.minions = 0;
    plan.verified_sybils = 14;
    CHECK(economy_step(10, plan, 1.0, 1.0, 5.0, true, 100).new_sybils == 2);
    CHECK(economy_step(10, plan, 1.0, 1.0, 5.0, true, 11).new_sybils == 1);
    CHECK(economy_step(10, plan, 1.0, 1.0, 5.0, true, 10).new_sybils == 0);
}

TEST_CASE("per-cycle accounting identities") {
    auto s = small(60, 1);
    s.reinvest = true;
    const auto r = run_replication(s, 5, 0);
    double prev_share = 0;
    for (const auto& m : r.cycles) {
        CHECK(m.income == doctest::Approx(m.verified_sybils * s.reward));
        CHECK(m.cost == doctest::Approx(m.minions_hired * s.minion_cost));
        CHECK(m.profit == doctest::Approx(m.income - m.cost));
        CHECK(m.minions_hired <= m.exposed_sybils);
        CHECK(m.exposed_sybils <= static_cast<double>(s.n_honest * s.group_size));
        CHECK(m.sybil_share >= prev_share);
        prev_share = m.sybil_share;
    }
}

TEST_CASE("minion cost stays near theta times exposed on average") {
    const auto r = run_replication(small(200, 1), 21, 0);
    double minions = 0, exposed = 0;
    for (std::size_t c = 20; c < r.cycles.size(); ++c) {
        minions += r.cycles[c].minions_hired;
        exposed += r.cycles[c].exposed_sybils;
    }
    CHECK(minions <= 0.5 * exposed * 1.02);
}

TEST_CASE("results are deterministic and independent of thread count") {
    const auto s = small(30, 5);
    const auto a = run_scenario(s, 77, 1);
    const auto b = run_scenario(s, 77, 4);
    std::ostringstream ca, cb;
    write_csv(ca, a);
    write_csv(cb, b);
    CHECK(ca.str() == cb.str());
    CHECK(a.advantage.mean == b.advantage.mean);
    const auto c = run_scenario(s, 78, 1);
    CHECK(c.advantage.mean != a.advantage.mean);
}

TEST_CASE("no attacker means no minions") {
    auto s = small(10, 2);
    s.n_sybil = 0;
    const auto r = run_scenario(s, 1, 1);
    CHECK(r.advantage.mean == 1.0);
    for (const auto& rep : r.replications)
        for (const auto& m : rep.cycles) CHECK(m.minions_hired == 0);
}

TEST_CASE("csv layout") {
    const auto r = run_scenario(small(3, 2), 2, 1);
    std::ostringstream out;
    write_csv(out, r);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "cycle,sybil_count,sybil_share,lucky_fraction,minions,income,cost,advantage,"
          "sybil_count_stderr,sybil_share_stderr,lucky_fraction_stderr,minions_stderr,income_stderr,cost_stderr,advantage_stderr");
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ',') == 14);
        CHECK(line.find(' ') == std::string::npos);
    }
    CHECK(rows == 3);
}

TEST_CASE("scenario validation and fields") {
    auto expect_invalid = [](scenario s) {
        try {
            validate(s);
            FAIL("expected InvalidScenario");
        } catch (const pop_error& e) {
            CHECK(e.code() == errc::invalid_scenario);
        }
    };
    scenario s;
    CHECK_NOTHROW(validate(s));
    s.group_size = 1;
    expect_invalid(s);
    s = {};
    s.threshold = 0;
    expect_invalid(s);
    s = {};
    s.window = 65;
    expect_invalid(s);

    CHECK(required_attendance(0.5, 10) == 5);
    CHECK(required_attendance(0.3, 10) == 3);
    CHECK(required_attendance(0.55, 10) == 6);

    s = {};
    set_field(s, "group_size", "4");
    CHECK(s.group_size == 4);
    set_field(s, "reinvest", "true");
    CHECK(s.reinvest);
    CHECK_THROWS_AS(set_field(s, "nope", "1"), pop_error);
    CHECK_THROWS_AS(set_field(s, "group_size", "abc"), pop_error);
    CHECK_THROWS_AS(set_field(s, "n_sybil", "-3"), pop_error);

    const auto back = json::parse(json(s).dump()).get<scenario>();
    CHECK(json(back) == json(s));
    CHECK(json::parse("{}").get<scenario>().n_honest == 9000);
    CHECK_THROWS_AS(json::parse(R"({"n_honest":"x"})").get<scenario>(), pop_error);
}

TEST_CASE("time-shifting") {
    const auto async = timeshift_demo(10, 1, true, 1);
    CHECK(async.verified_identities == 10);
    const auto sync = timeshift_demo(10, 1, false, 1);
    CHECK(sync.verified_identities == 1);
    const auto sync3 = timeshift_demo(10, 2, false, 3);
    CHECK(sync3.verified_identities == 6);
    std::map<std::pair<std::uint64_t, std::uint32_t>, int> per_slot_human;
    for (const auto& ses : sync3.sessions) CHECK(++per_slot_human[{ses.slot, ses.human}] == 1);
}
