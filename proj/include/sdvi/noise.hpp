// SPDX-License-Identifier: MIT
//
// Counter-based Gaussian noise. Every Brownian increment is a pure function of
// (seed, path id, substream, global step index), so paths can be simulated in
// any order, on any worker, and compared systems can share increments exactly.
#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace sdvi {

/// Philox4x32-10 block function.
[[nodiscard]] std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                                      std::array<std::uint32_t, 2> key);

/// Per-path view of the noise source.
class NoiseStream {
public:
    NoiseStream(std::uint64_t seed, std::uint64_t path_id, std::uint32_t substream = 0)
        : seed_(seed), path_id_(path_id), substream_(substream) {}

    /// Fill `out` with independent N(0,1) draws attached to global step `step`.
    /// Step k refers to the increment over [k h, (k + 1) h].
    void standard_normals(std::uint64_t step, std::span<double> out) const;

    [[nodiscard]] NoiseStream substream(std::uint32_t sub) const { return {seed_, path_id_, sub}; }
    [[nodiscard]] std::uint64_t seed() const { return seed_; }
    [[nodiscard]] std::uint64_t path_id() const { return path_id_; }
    [[nodiscard]] std::uint32_t substream_id() const { return substream_; }

private:
    std::uint64_t seed_;
    std::uint64_t path_id_;
    std::uint32_t substream_;
};

/// FNV-1a accumulator over the bit patterns of doubles.
class Checksum {
public:
    void add(double v);
    void add(std::span<const double> v) {
        for (double x : v) add(x);
    }
    [[nodiscard]] std::uint64_t value() const { return h_; }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace sdvi
