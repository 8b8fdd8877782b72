// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string_view>

namespace ieadapt {

/// xoshiro256** seeded through splitmix64, with a Marsaglia polar normal
/// transform. The transform only uses IEEE basic operations and sqrt (the
/// logarithm is evaluated by a fixed series), so a given seed produces the
/// same float sequence on every conforming platform.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed);

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() noexcept;
    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept;
    double normal() noexcept;

    /// Independent sub-stream keyed by a tag and an index, e.g.
    /// derive("block.attn_s.wq", 3). The parent state is not advanced.
    SeededRng derive(std::string_view tag, std::uint64_t index = 0) const;

private:
    std::uint64_t seed_;
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;
std::uint64_t fnv1a64(std::string_view text) noexcept;
/// Natural log from frexp plus an atanh series; bit-reproducible.
double portable_log(double x) noexcept;

}  // namespace ieadapt
