#include <doctest.h>
#include <oracles.hpp>

#include <pop/applications.hpp>
#include <pop/error.hpp>

#include <random>
#include <sstream>

using namespace pop;
using namespace pop::apps;

namespace {

seed32 seed_n(std::uint64_t n, std::uint8_t salt = 0) {
    seed32 s{};
    for (int i = 0; i < 8; ++i) s[i] = static_cast<std::uint8_t>(n >> (8 * i));
    s[30] = salt;
    s[31] = 0xa5;
    return s;
}

struct people {
    std::vector<crypto::person_key_pair> keys;
    ceremony::roll_list roll;
};

ceremony::roll_list roll_of(const std::vector<crypto::group_element>& tokens, std::string id = "cycle-roll", std::uint64_t cycle = 9) {
    ceremony::roll_list r;
    r.event_id = std::move(id);
    r.cycle = cycle;
    r.tokens = tokens;
    r.list_digest = ceremony::roll_digest(r.event_id, r.cycle, r.tokens);
    return r;
}

people make_people(std::size_t n, std::uint8_t salt = 0) {
    people p;
    std::vector<crypto::group_element> tokens;
    for (std::size_t i = 0; i < n; ++i) {
        p.keys.push_back(crypto::keygen(seed_n(i, salt)));
        tokens.push_back(p.keys.back().public_element);
    }
    p.roll = roll_of(tokens);
    return p;
}

}  // namespace

TEST_CASE("service tags") {
    const auto p = make_people(4);
    const auto& me = p.keys[2].secret;
    const auto a1 = make_service_tag(me, p.roll, "forum", "signup");
    const auto a2 = make_service_tag(me, p.roll, "forum", "signup");
    const auto b = make_service_tag(me, p.roll, "shop", "signup");
    CHECK(a1.tag() == a2.tag());
    CHECK(a1.tag() != b.tag());

    std::set<crypto::group_element> seen;
    CHECK(service_check(a1, p.roll, "forum", "signup", seen) == check_result::accepted);
    CHECK(service_check(a2, p.roll, "forum", "signup", seen) == check_result::duplicate);
    CHECK(service_check(b, p.roll, "forum", "signup", seen) == check_result::invalid);
    CHECK(service_check(a1, p.roll, "forum", "login", seen) == check_result::invalid);

    const auto other = make_people(4, 1);
    CHECK(service_check(a1, other.roll, "forum", "signup", seen) == check_result::invalid);

    const auto outsider = crypto::keygen(seed_n(77, 9));
    try {
        make_service_tag(outsider.secret, p.roll, "forum", "signup");
        FAIL("expected TokenNotInRoll");
    } catch (const pop_error& e) {
        CHECK(e.code() == errc::token_not_in_roll);
    }

    const auto back = json::parse(json(a1).dump()).get<tag_proof>();
    std::set<crypto::group_element> fresh;
    CHECK(service_check(back, p.roll, "forum", "signup", fresh) == check_result::accepted);
}

TEST_CASE("upvotes count once per person") {
    const auto p = make_people(6);
    std::vector<upvote> votes;
    for (const char* acct : {"a", "b", "c"}) votes.push_back(make_upvote(p.keys[0].secret, p.roll, "post", acct));
    CHECK(count_unique_upvotes("post", votes, p.roll) == 1);
    CHECK(count_unique_upvotes("post", {}, p.roll) == 0);
    CHECK(count_unique_upvotes("other-post", votes, p.roll) == 0);
}

TEST_CASE("five upvotes: three valid, one off-roll, one forged") {
    const auto p = make_people(6);
    std::vector<upvote> votes;
    for (int i = 0; i < 3; ++i) votes.push_back(make_upvote(p.keys[i].secret, p.roll, "post", "acct" + std::to_string(i)));

    const auto stranger = crypto::keygen(seed_n(1000, 3));
    auto their_roll = roll_of({stranger.public_element, p.keys[5].public_element}, "elsewhere");
    votes.push_back(make_upvote(stranger.secret, their_roll, "post", "acct-stranger"));

    auto forged = make_upvote(p.keys[4].secret, p.roll, "post", "acct4");
    forged.account_id = "acct-forged";
    votes.push_back(forged);

    CHECK(count_unique_upvotes("post", votes, p.roll) == 3);
}

TEST_CASE("upvote counting matches distinct-secret oracle") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t persons = 1 + rng() % 10;
        auto p = make_people(persons, static_cast<std::uint8_t>(trial));
        // Drop some people from the governing roll; they sign against the full one.
        const auto full = p.roll;
        std::vector<crypto::group_element> kept;
        std::vector<bool> on_roll(persons);
        for (std::size_t i = 0; i < persons; ++i) {
            on_roll[i] = rng() % 4 != 0;
            if (on_roll[i]) kept.push_back(p.keys[i].public_element);
        }
        if (kept.empty()) {
            kept.push_back(p.keys[0].public_element);
            on_roll[0] = true;
        }
        const auto governing = roll_of(kept);

        std::vector<upvote> votes;
        std::vector<crypto::scalar> valid_secrets;
        for (std::size_t i = 0; i < persons; ++i) {
            const std::size_t accounts = rng() % 5;
            for (std::size_t a = 0; a < accounts; ++a) {
                const std::string acct = "p" + std::to_string(i) + "a" + std::to_string(a);
                votes.push_back(make_upvote(p.keys[i].secret, on_roll[i] ? governing : full, "post", acct));
                if (on_roll[i]) valid_secrets.push_back(p.keys[i].secret);
            }
        }
        CHECK(count_unique_upvotes("post", votes, governing) == oracle::distinct_by_pairwise(valid_secrets));
    }
}

TEST_CASE("followers") {
    const auto p = make_people(5);
    std::vector<follow> f;
    f.push_back(make_follow(p.keys[0].secret, p.roll, "celebrity", "fan-1"));
    f.push_back(make_follow(p.keys[0].secret, p.roll, "celebrity", "fan-2"));
    CHECK(count_unique_followers("celebrity", f, p.roll) == 1);

    for (int i = 1; i < 5; ++i) f.push_back(make_follow(p.keys[i].secret, p.roll, "celebrity", "x" + std::to_string(i)));
    CHECK(count_unique_followers("celebrity", f, p.roll) == 5);

    // Next cycle person 0 did not renew: their follows stop counting.
    std::vector<crypto::group_element> renewed(p.roll.tokens.begin() + 1, p.roll.tokens.end());
    const auto next = roll_of(renewed, "cycle-roll", 10);
    std::vector<follow> refreshed;
    for (int i = 1; i < 5; ++i) refreshed.push_back(make_follow(p.keys[i].secret, next, "celebrity", "x" + std::to_string(i)));
    refreshed.push_back(f[0]);
    CHECK(count_unique_followers("celebrity", refreshed, next) == 4);

    const auto back = json::parse(json(f[0]).dump()).get<follow>();
    CHECK(count_unique_followers("celebrity", std::vector{back}, p.roll) == 1);
}

TEST_CASE("sortition basics") {
    const auto p = make_people(20);
    const auto all = sortition_select(p.roll, seed_n(1), 20);
    CHECK(all.selected.size() == 20);
    for (std::size_t i = 0; i < 20; ++i) CHECK(all.selected[i] == i);
    CHECK(sortition_select(p.roll, seed_n(1), 0).selected.empty());

    const auto a = sortition_select(p.roll, seed_n(2), 5);
    const auto b = sortition_select(p.roll, seed_n(2), 5);
    CHECK(a.selected == b.selected);
    CHECK(std::is_sorted(a.selected.begin(), a.selected.end()));
    CHECK(std::adjacent_find(a.selected.begin(), a.selected.end()) == a.selected.end());

    try {
        sortition_select(p.roll, seed_n(2), 21);
        FAIL("expected KTooLarge");
    } catch (const pop_error& e) {
        CHECK(e.code() == errc::k_too_large);
    }
    const auto back = json::parse(json(a).dump()).get<sortition_result>();
    CHECK(back.selected == a.selected);
    CHECK(back.seed == a.seed);
}

TEST_CASE("sortition inclusion does not depend on position") {
    auto p = make_people(20);
    std::vector<crypto::group_element> shuffled = p.roll.tokens;
    std::mt19937_64 rng(43);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto roll2 = roll_of(shuffled);

    std::map<crypto::group_element, int> hits1, hits2;
    const int seeds = 4000;
    for (int s = 0; s < seeds; ++s) {
        for (auto i : sortition_select(p.roll, seed_n(s, 1), 5).selected) ++hits1[p.roll.tokens[i]];
        for (auto i : sortition_select(roll2, seed_n(s, 2), 5).selected) ++hits2[roll2.tokens[i]];
    }
    for (const auto& t : p.roll.tokens) {
        CHECK(oracle::within_binomial_sigma(hits1[t], seeds, 0.25));
        CHECK(oracle::within_binomial_sigma(hits2[t], seeds, 0.25));
    }
}

TEST_CASE("count csv") {
    std::ostringstream out;
    const std::vector<count_row> rows{{"f1", 1, 3, 1}, {"f2", 4, 4, 4}};
    write_count_csv(out, rows);
    CHECK(out.str() == "fixture_id,persons,accounts,counted\nf1,1,3,1\nf2,4,4,4\n");
}
