#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pop {

using byte_vector = std::vector<std::uint8_t>;
using digest32 = std::array<std::uint8_t, 32>;
using seed32 = std::array<std::uint8_t, 32>;

std::string to_hex(std::span<const std::uint8_t> data);

// Accepts lowercase or uppercase hex; rejects odd length and non-hex characters.
std::optional<byte_vector> from_hex(std::string_view hex);

template <std::size_t N>
std::optional<std::array<std::uint8_t, N>> fixed_from_hex(std::string_view hex) {
    auto raw = from_hex(hex);
    if (!raw || raw->size() != N) return std::nullopt;
    std::array<std::uint8_t, N> out{};
    std::copy(raw->begin(), raw->end(), out.begin());
    return out;
}

inline byte_vector to_bytes(std::string_view text) {
    return byte_vector(text.begin(), text.end());
}

void append_u64_be(byte_vector& out, std::uint64_t value);

// u64 big-endian length followed by the bytes.
void append_length_prefixed(byte_vector& out, std::span<const std::uint8_t> data);

}  // namespace pop
