// SPDX-License-Identifier: MIT
#include "sdvi/noise.hpp"

#include <bit>
#include <cmath>
#include <numbers>

namespace sdvi {

namespace {

constexpr std::uint32_t kMulA = 0xD2511F53;
constexpr std::uint32_t kMulB = 0xCD9E8D57;
constexpr std::uint32_t kWeylA = 0x9E3779B9;
constexpr std::uint32_t kWeylB = 0xBB67AE85;

// Uniform in the open interval (0, 1).
double to_open_unit(std::uint32_t v) { return (static_cast<double>(v) + 0.5) * 0x1p-32; }

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMulA) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMulB) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeylA;
        key[1] += kWeylB;
    }
    return ctr;
}

void NoiseStream::standard_normals(std::uint64_t step, std::span<double> out) const {
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
    const std::size_t blocks_per_step = (out.size() + 3) / 4;
    std::size_t k = 0;
    for (std::size_t b = 0; b < blocks_per_step; ++b) {
        const std::uint64_t block = step * blocks_per_step + b;
        const std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(block), substream_,
                                               static_cast<std::uint32_t>(path_id_),
                                               static_cast<std::uint32_t>(path_id_ >> 32)};
        const auto r = philox4x32(ctr, key);
        for (int pair = 0; pair < 2 && k < out.size(); ++pair) {
            // Box-Muller on one pair of uniforms gives two normals.
            const double u1 = to_open_unit(r[2 * pair]);
            const double u2 = to_open_unit(r[2 * pair + 1]);
            const double radius = std::sqrt(-2.0 * std::log(u1));
            const double angle = 2.0 * std::numbers::pi * u2;
            out[k++] = radius * std::cos(angle);
            if (k < out.size()) out[k++] = radius * std::sin(angle);
        }
    }
}

void Checksum::add(double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
        h_ ^= (bits & 0xffU);
        h_ *= 0x100000001b3ULL;
        bits >>= 8;
    }
}

}  // namespace sdvi
