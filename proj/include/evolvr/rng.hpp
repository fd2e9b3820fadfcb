#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace evolvr {

// Deterministic RNG wrapper.  mt19937_64 output is pinned by the standard, and
// bounded() uses rejection sampling instead of std::uniform_int_distribution,
// whose mapping is implementation-defined.  Same seed, same platform-independent
// stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform draw from [0, n) without modulo bias.  n must be >= 1.
    std::uint64_t bounded(std::uint64_t n) {
        const std::uint64_t min = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            std::uint64_t v = engine_();
            if (v >= min) return v % n;
        }
    }

    // k distinct indexes from [0, n), via partial Fisher-Yates.  Order is part
    // of the deterministic contract.
    std::vector<std::size_t> pick_distinct(std::size_t n, std::size_t k) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        if (k > n) k = n;
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t j = i + static_cast<std::size_t>(bounded(n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        return idx;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace evolvr
