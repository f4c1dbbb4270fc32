#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace uf {

// Deterministic random source. std::mt19937_64 has a standardized bit
// stream, and the derived draws below avoid std::*_distribution (whose
// output is implementation-defined), so a seed pins every byte we emit.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n). Modulo bias is negligible for our n.
    int64_t uniform_index(int64_t n) { return static_cast<int64_t>(gen_() % static_cast<uint64_t>(n)); }

    // Inclusive integer range.
    int64_t uniform_int(int64_t lo, int64_t hi) { return lo + uniform_index(hi - lo + 1); }

    // Standard normal via Box-Muller (cosine branch only).
    double normal() {
        double u1 = 1.0 - uniform01();  // (0, 1]
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace uf
