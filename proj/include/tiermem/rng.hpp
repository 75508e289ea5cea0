#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace tiermem {

// Thin wrapper over mt19937_64 with hand-rolled distributions so that
// streams are bit-identical across standard library implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // Uniform in [0, n), n > 0. Modulo bias is irrelevant at simulator scales.
    uint64_t below(uint64_t n) { return gen_() % n; }

    // Uniform in [0, 1).
    double unit() { return double(gen_() >> 11) * (1.0 / 9007199254740992.0); }

    bool bernoulli(double p) { return unit() < p; }

    // Exponential with the given mean, rounded to at least 1 cycle.
    int64_t exp_cycles(double mean) {
        double u = unit();
        double v = -mean * std::log(1.0 - u);
        int64_t c = int64_t(v + 0.5);
        return c < 1 ? 1 : c;
    }

    // Derive an independent stream for a subcomponent.
    Rng fork(uint64_t salt) {
        uint64_t s = gen_() ^ (salt * 0x9e3779b97f4a7c15ull);
        return Rng(s);
    }

private:
    std::mt19937_64 gen_;
};

// FNV-1a, used for stable config hashes in summary output.
inline uint64_t fnv1a(const std::string& s) {
    uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace tiermem
