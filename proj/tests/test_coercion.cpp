#include <doctest.h>
#include <oracles.hpp>

#include <pop/ceremony.hpp>
#include <pop/coercion.hpp>
#include <pop/error.hpp>

#include <thread>

using namespace pop;
using namespace pop::coercion;

namespace {

tally_key key_n(std::uint8_t n) {
    tally_key k;
    k.key.fill(n);
    return k;
}

seed32 seed_n(std::uint32_t n) {
    seed32 s{};
    for (int i = 0; i < 4; ++i) s[i] = static_cast<std::uint8_t>(n >> (8 * i));
    s[31] = 0x3c;
    return s;
}

std::vector<std::uint8_t> serialized(const printed_token& t) {
    std::vector<std::uint8_t> out(t.public_encoding.begin(), t.public_encoding.end());
    out.insert(out.end(), t.auth.begin(), t.auth.end());
    return out;
}

ceremony::roll_list roll_with(const std::vector<crypto::group_element>& tokens, std::uint64_t cycle) {
    ceremony::roll_list r;
    r.event_id = "booth-test";
    r.cycle = cycle;
    r.tokens = tokens;
    r.list_digest = ceremony::roll_digest(r.event_id, r.cycle, r.tokens);
    return r;
}

}  // namespace

TEST_CASE("kiosk issues one real and k fakes") {
    kiosk k(key_n(1));
    const auto out = k.issue("ticket-1", 3, seed_n(1));
    REQUIRE(out.sheet.tokens.size() == 4);
    REQUIRE(out.keys.size() == 4);
    for (const auto& t : out.sheet.tokens) CHECK(public_validate(t));
    const auto real = filter_real(out.sheet.tokens, key_n(1));
    REQUIRE(real.size() == 1);
    CHECK(real.front() == out.sheet.tokens[0]);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(out.sheet.tokens[i].public_encoding ==
              byte_vector(out.keys[i].public_element.bytes().begin(), out.keys[i].public_element.bytes().end()));
    }
    CHECK(filter_real(out.sheet.tokens, key_n(2)).empty());
}

TEST_CASE("tickets are single use") {
    kiosk k(key_n(1));
    k.issue("t", 3, seed_n(1));
    try {
        k.issue("t", 3, seed_n(2));
        FAIL("expected TicketReused");
    } catch (const pop_error& e) {
        CHECK(e.code() == errc::ticket_reused);
    }
    CHECK_THROWS_AS(k.issue("u", 0, seed_n(1)), pop_error);
}

TEST_CASE("concurrent issuance consumes each ticket once") {
    kiosk k(key_n(4));
    std::atomic<int> issued{0}, refused{0};
    {
        std::vector<std::jthread> pool;
        for (int w = 0; w < 8; ++w) {
            pool.emplace_back([&, w] {
                for (int t = 0; t < 50; ++t) {
                    try {
                        k.issue("ticket-" + std::to_string(t), 1, seed_n(static_cast<std::uint32_t>(w)));
                        ++issued;
                    } catch (const pop_error&) {
                        ++refused;
                    }
                }
            });
        }
    }
    CHECK(issued == 50);
    CHECK(refused == 350);
}

TEST_CASE("public_validate is structural") {
    kiosk k(key_n(1));
    auto t = k.issue("x", 1, seed_n(3)).sheet.tokens[1];
    CHECK(public_validate(t));
    auto short_auth = t;
    short_auth.auth.pop_back();
    CHECK_FALSE(public_validate(short_auth));
    auto off_group = t;
    off_group.public_encoding.assign(32, 0xff);
    CHECK_FALSE(public_validate(off_group));
    CHECK(filter_real(std::vector{short_auth, off_group}, key_n(1)).empty());
}

TEST_CASE("filter keeps exactly the reals over 100 sheets") {
    kiosk k(key_n(9));
    std::vector<printed_token> pile, reals;
    for (int i = 0; i < 100; ++i) {
        const auto sheet = k.issue("t" + std::to_string(i), 3, seed_n(i)).sheet;
        reals.push_back(sheet.tokens[0]);
        pile.insert(pile.end(), sheet.tokens.begin(), sheet.tokens.end());
    }
    const auto kept = filter_real(pile, key_n(9));
    CHECK(kept == reals);
}

TEST_CASE("real and fake serializations are byte-wise indistinguishable") {
    kiosk k(key_n(5));
    std::vector<std::vector<std::uint8_t>> reals, fakes;
    for (std::uint32_t i = 0; i < 10000; ++i) {
        const auto sheet = k.issue("s" + std::to_string(i), 1, seed_n(i)).sheet;
        reals.push_back(serialized(sheet.tokens[0]));
        fakes.push_back(serialized(sheet.tokens[1]));
    }
    CHECK(reals.front().size() == fakes.front().size());
    const auto r = oracle::per_position_homogeneity(reals, fakes, 0.01);
    INFO("worst position " << r.worst_position << " p=" << r.min_p);
    CHECK_FALSE(r.separating);
}

TEST_CASE("sheet json omits the real index") {
    kiosk k(key_n(1));
    const auto sheet = k.issue("j", 3, seed_n(8)).sheet;
    const json j = sheet;
    REQUIRE(j.is_array());
    CHECK(j.size() == 4);
    for (const auto& t : j) CHECK(t.size() == 2);
    const auto back = j.get<printed_sheet>();
    CHECK(back.tokens == sheet.tokens);
}

TEST_CASE("kiosk output cannot reach a roll without a scan") {
    kiosk k(key_n(1));
    const auto out = k.issue("r", 3, seed_n(4));
    auto ev = ceremony::open_event({"e", "s", 1, 0, 5});
    ev.admit("holder", 0);
    ev.seal(5);
    ev.scan_exit("holder", out.keys[0].public_element);
    for (std::size_t i = 1; i < out.keys.size(); ++i) {
        CHECK_THROWS_AS(ev.scan_exit("fake-holder-" + std::to_string(i), out.keys[i].public_element), pop_error);
    }
    CHECK(ev.publish().tokens.size() == 1);
}

TEST_CASE("in-booth delegation") {
    kiosk k(key_n(1));
    const auto mine = k.issue("d1", 3, seed_n(11));
    const auto other = k.issue("d2", 3, seed_n(12));
    const auto roll = roll_with({mine.keys[0].public_element, other.keys[0].public_element}, 4);
    const auto delegate_a = crypto::keygen(seed_n(100)).public_element;
    const auto delegate_b = crypto::keygen(seed_n(101)).public_element;

    const auto first = booth_delegate(mine.keys[0].secret, roll, delegate_a);
    CHECK(verify_delegation(first, roll));
    CHECK_FALSE(verify_delegation(first, roll_with(roll.tokens, 5)));

    const auto second = booth_delegate(mine.keys[0].secret, roll, delegate_b);
    CHECK(first.delegator_tag() == second.delegator_tag());

    delegation_registry reg;
    CHECK(reg.record(first, roll));
    CHECK(reg.record(second, roll));
    CHECK(reg.size() == 1);
    CHECK(reg.delegate_of(first.delegator_tag()) == delegate_b);

    try {
        booth_delegate(mine.keys[1].secret, roll, delegate_a);
        FAIL("expected TokenNotInRoll");
    } catch (const pop_error& e) {
        CHECK(e.code() == errc::token_not_in_roll);
    }

    auto forged = first;
    forged.delegate_public = delegate_b;
    CHECK_FALSE(reg.record(forged, roll));

    const auto back = json::parse(json(first).dump()).get<delegation_record>();
    CHECK(verify_delegation(back, roll));
}
