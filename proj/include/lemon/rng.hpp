// SPDX-License-Identifier: Apache-2.0
//
// Counter-based generator. Draw n of a stream with key K is
//   splitmix64_finalize(K + (n + 1) * 0x9E3779B97F4A7C15)
// so any draw is a pure function of (key, counter). Substreams get the key
//   splitmix64_finalize(K ^ splitmix64_finalize(fnv1a64(tag) + index)).
// Uniforms take the top 53 bits; normals use the Box-Muller cosine branch on
// two consecutive uniforms (one normal per pair).

#pragma once

#include <cstdint>
#include <string_view>

namespace lemon {

std::uint64_t splitmix64_finalize(std::uint64_t z);
std::uint64_t fnv1a64(std::string_view text);

class Rng {
public:
    explicit Rng(std::uint64_t key) : key_(key) {}

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64();
    /// Uniform on [0, 1).
    double uniform();
    double uniform(double lo, double hi);
    double normal(double mean = 0.0, double stddev = 1.0);
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    /// Independent stream keyed by (this key, tag, index). Does not advance this stream.
    Rng substream(std::string_view tag, std::uint64_t index = 0) const;

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace lemon
