#include "igrate/rng.hpp"

#include <cmath>
#include <numbers>

namespace igrate::rng {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
    std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

Key make_key(std::uint64_t seed) noexcept {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

}  // namespace

Counter philox4x32_10(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

std::uint64_t fnv1a64(std::string_view text) noexcept {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        hash ^= ch;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept {
    // One Philox evaluation mixes the parent seed with the label hash.
    std::uint64_t h = fnv1a64(label);
    Counter out = philox4x32_10({static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32), 0, 0}, make_key(seed));
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

double to_unit_open(std::uint32_t hi, std::uint32_t lo) noexcept {
    // 52 bits keep (bits + 0.5) / 2^52 exactly representable below 1.
    std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 12;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

Stream::Stream(std::uint64_t seed) noexcept : key_(make_key(seed)) {}

Stream::Stream(std::uint64_t seed, std::string_view label) noexcept : key_(make_key(derive_seed(seed, label))) {}

Counter Stream::block(std::uint64_t row, std::uint32_t slot) const noexcept {
    return philox4x32_10({static_cast<std::uint32_t>(row), static_cast<std::uint32_t>(row >> 32), slot, 0}, key_);
}

double Stream::uniform(std::uint64_t row, std::uint32_t slot) const noexcept {
    Counter b = block(row, slot);
    return to_unit_open(b[0], b[1]);
}

double Stream::normal(std::uint64_t row, std::uint32_t slot) const noexcept {
    Counter b = block(row, slot);
    double u1 = to_unit_open(b[0], b[1]);
    double u2 = to_unit_open(b[2], b[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

bool Stream::bernoulli(std::uint64_t row, std::uint32_t slot, double p) const noexcept {
    return uniform(row, slot) < p;
}

std::uint64_t Stream::below(std::uint64_t row, std::uint32_t slot, std::uint64_t bound) const noexcept {
    if (bound <= 1) return 0;
    auto index = static_cast<std::uint64_t>(uniform(row, slot) * static_cast<double>(bound));
    return index < bound ? index : bound - 1;
}

}  // namespace igrate::rng
