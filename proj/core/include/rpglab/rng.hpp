#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rpglab/types.hpp"

namespace rpglab {

/// Deterministic random stream. The generator is xoshiro256++ seeded through
/// splitmix64 from a (seed, label) pair, so every stream is reproducible
/// bit-for-bit on any platform. Distinct labels give independent-behaving
/// streams for the same seed.
class RngStream {
public:
    RngStream() : RngStream(0, "default") {}
    RngStream(std::uint64_t seed, std::string_view label);

    /// Derive a child stream; same (parent, label) always gives the same child.
    RngStream child(std::string_view label) const;
    RngStream child(std::string_view label, std::uint64_t index) const;

    std::uint64_t next_u64();

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01();
    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);
    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n);

    /// Standard normal draw (Box-Muller, pair cached).
    double normal01();
    /// Vector of i.i.d. standard normals.
    Vector normal_vector(int n);

    /// Categorical draw from nonnegative weights summing to ~1.
    int categorical(const Vector& probs);

private:
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
    std::uint64_t key_; // mixing key this stream was derived from

    explicit RngStream(std::uint64_t key);
};

/// Entry point used throughout the project: one top-level stream per
/// (seed, purpose-label) pair.
RngStream rng_fork(std::uint64_t seed, std::string_view label);

} // namespace rpglab
