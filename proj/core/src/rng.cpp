#include "rpglab/rng.hpp"

#include <cmath>
#include <numbers>

namespace rpglab {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

} // namespace

RngStream::RngStream(std::uint64_t key) : key_(key) {
    std::uint64_t sm = key;
    for (auto& s : s_) s = splitmix64(sm);
}

RngStream::RngStream(std::uint64_t seed, std::string_view label)
    : RngStream([&] {
          std::uint64_t sm = seed ^ rotl(fnv1a(label), 17);
          return splitmix64(sm);
      }()) {}

RngStream RngStream::child(std::string_view label) const {
    std::uint64_t sm = key_ ^ rotl(fnv1a(label), 29);
    return RngStream(splitmix64(sm));
}

RngStream RngStream::child(std::string_view label, std::uint64_t index) const {
    std::uint64_t sm = key_ ^ rotl(fnv1a(label), 29) ^ (0x5851f42d4c957f2dULL * (index + 1));
    return RngStream(splitmix64(sm));
}

std::uint64_t RngStream::next_u64() {
    // xoshiro256++
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RngStream::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
    require(n > 0, "uniform_index: n must be positive");
    // rejection sampling to avoid modulo bias
    const std::uint64_t limit = n * (UINT64_MAX / n);
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

double RngStream::normal01() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1, u2;
    do {
        u1 = uniform01();
    } while (u1 <= 0.0);
    u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

Vector RngStream::normal_vector(int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = normal01();
    return v;
}

int RngStream::categorical(const Vector& probs) {
    require(probs.size() > 0, "categorical: empty probability vector");
    const double u = uniform01();
    double acc = 0.0;
    for (int i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return static_cast<int>(probs.size()) - 1;
}

RngStream rng_fork(std::uint64_t seed, std::string_view label) {
    return RngStream(seed, label);
}

} // namespace rpglab
