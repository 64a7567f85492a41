#pragma once

// Token consumers: per-service unlinkable tags, one-per-person like and
// follower counts, and beacon-seeded sortition over a roll list.

#include <pop/ceremony.hpp>
#include <pop/crypto.hpp>
#include <pop/json.hpp>

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace pop::apps {

using crypto::group_element;

byte_vector service_scope(std::string_view service_id, std::string_view action_id);
// Binds the post, not the account, so every account of one person shares the tag.
byte_vector like_scope(std::string_view post_id);
byte_vector follow_scope(std::string_view followed_account);

struct tag_proof {
    crypto::linkable_signature signature;

    const group_element& tag() const noexcept { return signature.tag; }
};

// Throws pop_error(token_not_in_roll).
tag_proof make_service_tag(const crypto::scalar& secret,
                           const ceremony::roll_list& roll,
                           std::string_view service_id,
                           std::string_view action_id);

enum class check_result { accepted, duplicate, invalid };

std::string_view to_string(check_result r) noexcept;

// Inserts the tag into seen_tags on acceptance. seen_tags needs external
// locking if shared between threads.
check_result service_check(const tag_proof& proof,
                           const ceremony::roll_list& roll,
                           std::string_view service_id,
                           std::string_view action_id,
                           std::set<group_element>& seen_tags);

struct upvote {
    std::string post_id;
    std::string account_id;
    tag_proof proof;
};

upvote make_upvote(const crypto::scalar& secret,
                   const ceremony::roll_list& roll,
                   std::string post_id,
                   std::string account_id);

std::size_t count_unique_upvotes(std::string_view post_id,
                                 std::span<const upvote> upvotes,
                                 const ceremony::roll_list& roll_at_post);

struct follow {
    std::string followed_account;
    std::string follower_account;
    tag_proof proof;
};

follow make_follow(const crypto::scalar& secret,
                   const ceremony::roll_list& roll,
                   std::string followed_account,
                   std::string follower_account);

// Recomputed against the roll passed in; followers whose token is not on it count zero.
std::size_t count_unique_followers(std::string_view followed_account,
                                   std::span<const follow> followers,
                                   const ceremony::roll_list& current_roll);

struct sortition_result {
    seed32 seed{};
    std::size_t k = 0;
    std::vector<std::size_t> selected;  // sorted, distinct token indices
};

// Partial Fisher-Yates keyed by hash(roll digest || seed). Throws pop_error(k_too_large).
sortition_result sortition_select(const ceremony::roll_list& roll, const seed32& seed, std::size_t k);

struct count_row {
    std::string fixture_id;
    std::size_t persons = 0;
    std::size_t accounts = 0;
    std::size_t counted = 0;
};

// Columns: fixture_id,persons,accounts,counted
void write_count_csv(std::ostream& out, std::span<const count_row> rows);

void to_json(json& j, const tag_proof& p);
void from_json(const json& j, tag_proof& p);
void to_json(json& j, const upvote& u);
void from_json(const json& j, upvote& u);
void to_json(json& j, const follow& f);
void from_json(const json& j, follow& f);
void to_json(json& j, const sortition_result& r);
void from_json(const json& j, sortition_result& r);

}  // namespace pop::apps
