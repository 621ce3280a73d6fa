#pragma once

#include <cstdint>
#include <cmath>

namespace marlns {

// splitmix64: used for seed derivation so that env workers, schedulers,
// network init and evaluation each get an independent stream from one
// master seed.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derive a child seed from (master, stream_id). Deterministic and documented:
// two rounds of splitmix64 over master ^ mix(stream_id).
inline uint64_t derive_seed(uint64_t master, uint64_t stream_id) {
    uint64_t s = master ^ (0x9e3779b97f4a7c15ULL * (stream_id + 1));
    splitmix64(s);
    return splitmix64(s);
}

// xoshiro256++, seeded via splitmix64. Self-contained so results do not
// depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) { reseed(seed); }

    void reseed(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
        has_gauss_ = false;
    }

    uint64_t u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0,1) with 53 bits
    double uniform01() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, n), n > 0
    uint64_t below(uint64_t n) {
        // rejection sampling keeps the draw exactly uniform
        const uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t r = u64();
            if (r >= threshold) return r % n;
        }
    }

    int below_int(int n) { return static_cast<int>(below(static_cast<uint64_t>(n))); }

    // standard normal via Box-Muller (cached second value)
    double normal() {
        if (has_gauss_) {
            has_gauss_ = false;
            return gauss_;
        }
        double u1, u2;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        gauss_ = r * std::sin(theta);
        has_gauss_ = true;
        return r * std::cos(theta);
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t s_[4]{};
    bool has_gauss_ = false;
    double gauss_ = 0.0;
};

}  // namespace marlns
