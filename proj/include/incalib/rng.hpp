// Copyright Contributors to the incalib Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace incalib {

/// SplitMix64 finalizer. Used to derive independent streams from
/// (seed, index) pairs so that parallel and serial execution agree
/// bit-for-bit.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Derives a stream key for stream `index` of a master `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return mix64(seed ^ mix64(index + 0x632BE59BD9B4E019ull));
}

/// Counter-based generator: the n-th output depends only on (key, n),
/// never on how many values other streams consumed.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}
    CounterRng(std::uint64_t seed, std::uint64_t index) noexcept
        : key_(derive_seed(seed, index)) {}

    std::uint64_t next() noexcept { return mix64(key_ + 0x9E3779B97F4A7C15ull * ++counter_); }

    /// Unbiased-enough mapping of the next value into [0, n). n must be > 0.
    std::uint64_t next_below(std::uint64_t n) noexcept {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    /// Uniform double in [0, 1).
    double next_unit() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace incalib
