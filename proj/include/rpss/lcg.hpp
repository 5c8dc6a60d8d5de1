#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>

namespace rpss {

// Well-known full-period constants for modulus 2^64; overridable via config.
inline constexpr std::uint64_t kDefaultMultiplier = 6364136223846793005ULL;
inline constexpr std::uint64_t kDefaultIncrement = 1442695040888963407ULL;

// 64-bit linear congruential generator, modulus 2^64 by wrapping arithmetic.
// Hull-Dobell for this modulus: multiplier = 1 (mod 4), increment odd.
// Output words are the high 32 bits of the state; the low bits of an LCG are
// weak and never leave this class.
class LcgState {
public:
    explicit LcgState(std::uint64_t seed,
                      std::uint64_t multiplier = kDefaultMultiplier,
                      std::uint64_t increment = kDefaultIncrement)
        : seed_(seed), multiplier_(multiplier), increment_(increment) {
        if (multiplier_ % 4 != 1) {
            throw std::invalid_argument("LcgState: multiplier must be congruent to 1 mod 4");
        }
        if (increment_ % 2 != 1) {
            throw std::invalid_argument("LcgState: increment must be odd");
        }
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t multiplier() const { return multiplier_; }
    std::uint64_t increment() const { return increment_; }

    // Advances the state once and returns the high 32 bits of the new seed.
    std::uint32_t next() {
        seed_ = multiplier_ * seed_ + increment_;
        return static_cast<std::uint32_t>(seed_ >> 32);
    }

    // Two words concatenated; the first call supplies the high half.
    std::uint64_t next_u64() {
        const std::uint64_t hi = next();
        const std::uint64_t lo = next();
        return (hi << 32) | lo;
    }

    // Unbiased draw from [0, bound) by rejecting words at or above the largest
    // multiple of bound. Powers of two never reject; every attempt consumes
    // exactly one 64-bit draw (two 32-bit words), including bound = 1.
    std::uint64_t next_bounded(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("next_bounded: bound must be >= 1");
        const std::uint64_t rem = (0 - bound) % bound;  // 2^64 mod bound
        for (;;) {
            const std::uint64_t w = next_u64();
            if (w <= std::numeric_limits<std::uint64_t>::max() - rem) return w % bound;
        }
    }

    // Jitter injection: seed' = (seed << k) + t_mod, both wrapping mod 2^64.
    // Multiplier and increment are untouched, preserving state continuity.
    void reseed_shift_add(std::uint64_t t_mod, unsigned k) {
        if (k >= 64) throw std::invalid_argument("reseed_shift_add: shift must be in [0, 64)");
        seed_ = (seed_ << k) + t_mod;
    }

    friend bool operator==(const LcgState& a, const LcgState& b) = default;

private:
    std::uint64_t seed_;
    std::uint64_t multiplier_;
    std::uint64_t increment_;
};

}  // namespace rpss
