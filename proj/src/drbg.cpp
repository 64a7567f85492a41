#include <pop/crypto.hpp>
#include <pop/drbg.hpp>

#include <limits>
#include <stdexcept>

namespace pop {

drbg::drbg(std::string_view domain, std::span<const std::uint8_t> seed)
    : domain_(domain), seed_(seed.begin(), seed.end()) {}

void drbg::refill() {
    block_ = crypto::transcript("pop/drbg").append(domain_).append(seed_).append_u64(counter_++).digest();
    used_ = 0;
}

void drbg::fill(std::span<std::uint8_t> out) {
    for (auto& b : out) {
        if (used_ == block_.size()) refill();
        b = block_[used_++];
    }
}

std::uint64_t drbg::next_u64() {
    std::array<std::uint8_t, 8> raw{};
    fill(raw);
    std::uint64_t v = 0;
    for (auto b : raw) v = (v << 8) | b;
    return v;
}

std::uint64_t drbg::uniform(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("drbg::uniform bound must be positive");
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - (max % bound + 1) % bound;
    for (;;) {
        const std::uint64_t v = next_u64();
        if (v <= limit) return v % bound;
    }
}

seed32 drbg::next_seed() {
    seed32 s{};
    fill(s);
    return s;
}

}  // namespace pop
