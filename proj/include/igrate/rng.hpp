#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace igrate::rng {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11), the variant
// shipped by Random123 and specified for C++26 as std::philox4x32.
using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

Counter philox4x32_10(Counter counter, Key key) noexcept;

// 64-bit FNV-1a, used to turn stage labels into sub-seeds.
std::uint64_t fnv1a64(std::string_view text) noexcept;

// Derives the seed of a labelled sub-stream from a parent seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept;

// Maps two 32-bit words to a double in the open interval (0, 1) on a 2^-52 grid.
double to_unit_open(std::uint32_t hi, std::uint32_t lo) noexcept;

// A keyed family of random draws addressed by (row, slot). Each address maps
// to one Philox block, so draws are independent of evaluation order and can
// be generated in parallel without changing the stream.
class Stream {
public:
    explicit Stream(std::uint64_t seed) noexcept;
    Stream(std::uint64_t seed, std::string_view label) noexcept;

    Counter block(std::uint64_t row, std::uint32_t slot) const noexcept;
    double uniform(std::uint64_t row, std::uint32_t slot) const noexcept;
    // Standard normal by Box-Muller on the two uniforms of one block.
    double normal(std::uint64_t row, std::uint32_t slot) const noexcept;
    bool bernoulli(std::uint64_t row, std::uint32_t slot, double p) const noexcept;
    // Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t row, std::uint32_t slot, std::uint64_t bound) const noexcept;

    const Key& key() const noexcept { return key_; }

private:
    Key key_;
};

}  // namespace igrate::rng
