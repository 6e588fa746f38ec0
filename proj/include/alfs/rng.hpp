#pragma once

#include <cstdint>
#include <vector>

// Self-contained generators so that every seeded operation is bit-reproducible.
// <random> distributions are implementation-defined and would tie results to a
// particular standard library.

namespace alfs {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Combines a seed with a stream tag (round index, role id, ...) into a new
// well-mixed seed. Not commutative on purpose.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    s = a ^ (tag + 0x9e3779b97f4a7c15ULL);
    return splitmix64(s);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag1, std::uint64_t tag2) {
    return mix_seed(mix_seed(seed, tag1), tag2);
}

// xoshiro256** by Blackman & Vigna, seeded through splitmix64.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t threshold = (0ULL - n) % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t state_[4];
};

// Fisher-Yates, back to front.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

// k distinct values from {0..n-1}, in draw order.
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k && i < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(idx[i], idx[j]);
        out.push_back(idx[i]);
    }
    return out;
}

}  // namespace alfs
