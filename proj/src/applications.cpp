#include <pop/applications.hpp>
#include <pop/drbg.hpp>
#include <pop/error.hpp>

#include <algorithm>
#include <numeric>
#include <ostream>

namespace pop::apps {

byte_vector service_scope(std::string_view service_id, std::string_view action_id) {
    return crypto::make_scope("service", {service_id, action_id});
}

byte_vector like_scope(std::string_view post_id) {
    return crypto::make_scope("like", {post_id});
}

byte_vector follow_scope(std::string_view followed_account) {
    return crypto::make_scope("follow", {followed_account});
}

std::string_view to_string(check_result r) noexcept {
    switch (r) {
        case check_result::accepted: return "Accepted";
        case check_result::duplicate: return "Duplicate";
        case check_result::invalid: return "Invalid";
    }
    return "Unknown";
}

namespace {

tag_proof sign_in_roll(const crypto::scalar& secret,
                       const ceremony::roll_list& roll,
                       const byte_vector& scope,
                       std::string_view message) {
    const auto mine = crypto::public_from_secret(secret);
    if (std::find(roll.tokens.begin(), roll.tokens.end(), mine) == roll.tokens.end()) {
        throw pop_error(errc::token_not_in_roll, "token is not on the governing roll");
    }
    return {crypto::lrs_sign(secret, roll.tokens, scope, to_bytes(message))};
}

bool proof_holds(const tag_proof& proof, const ceremony::roll_list& roll, const byte_vector& scope,
                 std::string_view message) {
    return crypto::lrs_verify(roll.tokens, scope, to_bytes(message), proof.signature);
}

// Service tags sign the action id so a proof is bound to the action it was made for.
std::string service_message(std::string_view service_id, std::string_view action_id) {
    return std::string(service_id) + "/" + std::string(action_id);
}

}  // namespace

tag_proof make_service_tag(const crypto::scalar& secret,
                           const ceremony::roll_list& roll,
                           std::string_view service_id,
                           std::string_view action_id) {
    return sign_in_roll(secret, roll, service_scope(service_id, action_id), service_message(service_id, action_id));
}

check_result service_check(const tag_proof& proof,
                           const ceremony::roll_list& roll,
                           std::string_view service_id,
                           std::string_view action_id,
                           std::set<group_element>& seen_tags) {
    if (!proof_holds(proof, roll, service_scope(service_id, action_id), service_message(service_id, action_id))) {
        return check_result::invalid;
    }
    if (!seen_tags.insert(proof.tag()).second) return check_result::duplicate;
    return check_result::accepted;
}

upvote make_upvote(const crypto::scalar& secret,
                   const ceremony::roll_list& roll,
                   std::string post_id,
                   std::string account_id) {
    tag_proof proof = sign_in_roll(secret, roll, like_scope(post_id), account_id);
    return {std::move(post_id), std::move(account_id), std::move(proof)};
}

std::size_t count_unique_upvotes(std::string_view post_id,
                                 std::span<const upvote> upvotes,
                                 const ceremony::roll_list& roll_at_post) {
    const byte_vector scope = like_scope(post_id);
    std::set<group_element> tags;
    for (const auto& u : upvotes) {
        if (u.post_id != post_id) continue;
        if (proof_holds(u.proof, roll_at_post, scope, u.account_id)) tags.insert(u.proof.tag());
    }
    return tags.size();
}

follow make_follow(const crypto::scalar& secret,
                   const ceremony::roll_list& roll,
                   std::string followed_account,
                   std::string follower_account) {
    tag_proof proof = sign_in_roll(secret, roll, follow_scope(followed_account), follower_account);
    return {std::move(followed_account), std::move(follower_account), std::move(proof)};
}

std::size_t count_unique_followers(std::string_view followed_account,
                                   std::span<const follow> followers,
                                   const ceremony::roll_list& current_roll) {
    const byte_vector scope = follow_scope(followed_account);
    std::set<group_element> tags;
    for (const auto& f : followers) {
        if (f.followed_account != followed_account) continue;
        if (proof_holds(f.proof, current_roll, scope, f.follower_account)) tags.insert(f.proof.tag());
    }
    return tags.size();
}

sortition_result sortition_select(const ceremony::roll_list& roll, const seed32& seed, std::size_t k) {
    const std::size_t n = roll.tokens.size();
    if (k > n) {
        throw pop_error(errc::k_too_large, "cannot select " + std::to_string(k) + " of " + std::to_string(n) + " tokens");
    }
    const digest32 key = crypto::transcript("pop/sortition").append(roll.list_digest).append(seed).digest();
    drbg rng("pop/sortition/draw", key);

    std::vector<std::size_t> indices(n);
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t pick = i + static_cast<std::size_t>(rng.uniform(n - i));
        std::swap(indices[i], indices[pick]);
    }
    sortition_result out{seed, k, std::vector<std::size_t>(indices.begin(), indices.begin() + static_cast<long>(k))};
    std::sort(out.selected.begin(), out.selected.end());
    return out;
}

void write_count_csv(std::ostream& out, std::span<const count_row> rows) {
    out << "fixture_id,persons,accounts,counted\n";
    for (const auto& r : rows) {
        out << r.fixture_id << ',' << r.persons << ',' << r.accounts << ',' << r.counted << '\n';
    }
}

void to_json(json& j, const tag_proof& p) {
    j = json{{"signature", p.signature}, {"tag", p.tag()}};
}

void from_json(const json& j, tag_proof& p) {
    try {
        p.signature = require(j, "signature").get<crypto::linkable_signature>();
        if (j.contains("tag") && j.at("tag").get<group_element>() != p.signature.tag) {
            throw pop_error(errc::malformed_input, "tag proof: tag disagrees with signature");
        }
    } catch (const json::exception& e) {
        throw pop_error(errc::malformed_input, std::string("tag proof: ") + e.what());
    }
}

void to_json(json& j, const upvote& u) {
    j = json{{"post_id", u.post_id}, {"account_id", u.account_id}, {"proof", u.proof}};
}

void from_json(const json& j, upvote& u) {
    try {
        u.post_id = require(j, "post_id").get<std::string>();
        u.account_id = require(j, "account_id").get<std::string>();
        u.proof = require(j, "proof").get<tag_proof>();
    } catch (const json::exception& e) {
        throw pop_error(errc::malformed_input, std::string("upvote: ") + e.what());
    }
}

void to_json(json& j, const follow& f) {
    j = json{{"followed_account", f.followed_account}, {"follower_account", f.follower_account}, {"proof", f.proof}};
}

void from_json(const json& j, follow& f) {
    try {
        f.followed_account = require(j, "followed_account").get<std::string>();
        f.follower_account = require(j, "follower_account").get<std::string>();
        f.proof = require(j, "proof").get<tag_proof>();
    } catch (const json::exception& e) {
        throw pop_error(errc::malformed_input, std::string("follow: ") + e.what());
    }
}

void to_json(json& j, const sortition_result& r) {
    j = json{{"seed", to_hex(r.seed)}, {"k", r.k}, {"selected", r.selected}};
}

void from_json(const json& j, sortition_result& r) {
    try {
        r.seed = seed_from_json(require(j, "seed"), "seed");
        r.k = require(j, "k").get<std::size_t>();
        r.selected = require(j, "selected").get<std::vector<std::size_t>>();
    } catch (const json::exception& e) {
        throw pop_error(errc::malformed_input, std::string("sortition result: ") + e.what());
    }
}

}  // namespace pop::apps
