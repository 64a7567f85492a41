#pragma once

// Reference computations for the tests. They are written against libsodium
// and Boost directly rather than the pop library, so a bug in the library
// cannot also hide in its oracle.

#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <sodium.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace oracle {

inline bool within_binomial_sigma(double observed, double n, double p, double k = 3.0) {
    const double sd = std::sqrt(n * p * (1.0 - p));
    return std::abs(observed - n * p) <= k * sd;
}

inline double chi_square_sf(double statistic, double dof) {
    if (dof <= 0) return 1.0;
    return boost::math::gamma_q(dof / 2.0, statistic / 2.0);
}

// A fixed Sybil's g-1 group mates are a uniform (g-1)-subset of the other
// H+S-1 identities; count the all-Sybil subsets.
inline double lucky_by_counting(std::uint64_t honest, std::uint64_t sybil, unsigned g) {
    if (sybil < g) return 0.0;
    const auto all = static_cast<unsigned>(honest + sybil - 1);
    const auto fav = static_cast<unsigned>(sybil - 1);
    return boost::math::binomial_coefficient<double>(fav, g - 1) / boost::math::binomial_coefficient<double>(all, g - 1);
}

// Secret-level duplicate count, the thing linkage tags are supposed to reveal.
template <typename Scalar>
std::size_t distinct_by_pairwise(const std::vector<Scalar>& secrets) {
    std::size_t distinct = 0;
    for (std::size_t i = 0; i < secrets.size(); ++i) {
        bool seen = false;
        for (std::size_t j = 0; j < i && !seen; ++j) seen = secrets[j].bytes() == secrets[i].bytes();
        if (!seen) ++distinct;
    }
    return distinct;
}

// Hash-to-group as documented: SHA-256(len||domain || 0x00 || len||data) and
// the same with 0x01, concatenated and mapped with ristretto255's one-way map.
inline std::array<std::uint8_t, 32> hash_to_group(std::string_view domain, std::span<const std::uint8_t> data) {
    auto be64 = [](std::uint64_t v) {
        std::array<std::uint8_t, 8> b{};
        for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (56 - 8 * i));
        return b;
    };
    std::array<std::uint8_t, 64> wide{};
    for (std::uint8_t half = 0; half < 2; ++half) {
        crypto_hash_sha256_state st;
        crypto_hash_sha256_init(&st);
        const auto dl = be64(domain.size());
        crypto_hash_sha256_update(&st, dl.data(), dl.size());
        crypto_hash_sha256_update(&st, reinterpret_cast<const unsigned char*>(domain.data()), domain.size());
        crypto_hash_sha256_update(&st, &half, 1);
        const auto ml = be64(data.size());
        crypto_hash_sha256_update(&st, ml.data(), ml.size());
        crypto_hash_sha256_update(&st, data.data(), data.size());
        crypto_hash_sha256_final(&st, wide.data() + 32 * half);
    }
    std::array<std::uint8_t, 32> out{};
    crypto_core_ristretto255_from_hash(out.data(), wide.data());
    return out;
}

inline std::array<std::uint8_t, 32> scalar_mult(std::span<const std::uint8_t, 32> k, std::span<const std::uint8_t, 32> p) {
    std::array<std::uint8_t, 32> out{};
    if (crypto_scalarmult_ristretto255(out.data(), k.data(), p.data()) != 0) out.fill(0);
    return out;
}

struct homogeneity_result {
    double min_p = 1.0;
    std::size_t worst_position = 0;
    std::size_t positions = 0;
    bool separating = false;  // some position rejects at alpha / positions
};

// Per byte position, a 2 x bins chi-square test of homogeneity between two
// samples of equal-length byte strings. Bins merge the low bits so each
// expected cell stays near 5 or more; Bonferroni keeps the family-wise level at alpha.
inline homogeneity_result per_position_homogeneity(const std::vector<std::vector<std::uint8_t>>& a,
                                                   const std::vector<std::vector<std::uint8_t>>& b,
                                                   double alpha) {
    homogeneity_result r;
    if (a.empty() || b.empty()) return r;
    const std::size_t len = std::min(a.front().size(), b.front().size());
    const std::size_t smallest = std::min(a.size(), b.size());
    std::size_t bins = std::bit_floor(std::max<std::size_t>(smallest / 5, 2));
    bins = std::min<std::size_t>(bins, 256);
    const int shift = 8 - std::countr_zero(bins);
    r.positions = len;

    for (std::size_t pos = 0; pos < len; ++pos) {
        std::vector<double> ca(bins, 0), cb(bins, 0);
        for (const auto& s : a) ca[s[pos] >> shift] += 1;
        for (const auto& s : b) cb[s[pos] >> shift] += 1;
        const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size()), n = na + nb;
        double stat = 0;
        std::size_t used = 0;
        for (std::size_t k = 0; k < bins; ++k) {
            const double col = ca[k] + cb[k];
            if (col == 0) continue;
            ++used;
            const double ea = na * col / n, eb = nb * col / n;
            stat += (ca[k] - ea) * (ca[k] - ea) / ea + (cb[k] - eb) * (cb[k] - eb) / eb;
        }
        const double p = chi_square_sf(stat, static_cast<double>(used) - 1.0);
        if (p < r.min_p) {
            r.min_p = p;
            r.worst_position = pos;
        }
    }
    r.separating = r.min_p < alpha / static_cast<double>(std::max<std::size_t>(len, 1));
    return r;
}

}  // namespace oracle
