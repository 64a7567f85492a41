#pragma once

#include <pop/bytes.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace pop {

// Deterministic byte stream: SHA-256 in counter mode over (domain, seed).
// Output depends only on the inputs, so draws reproduce across platforms.
class drbg {
public:
    drbg(std::string_view domain, std::span<const std::uint8_t> seed);

    std::uint64_t next_u64();
    // Uniform in [0, bound) by rejection; bound must be positive.
    std::uint64_t uniform(std::uint64_t bound);
    void fill(std::span<std::uint8_t> out);
    seed32 next_seed();

private:
    void refill();

    std::string domain_;
    byte_vector seed_;
    std::uint64_t counter_ = 0;
    digest32 block_{};
    std::size_t used_ = block_.size();
};

}  // namespace pop
