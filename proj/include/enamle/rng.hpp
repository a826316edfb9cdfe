#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace enamle::rng {

// All randomness in this library flows through mt19937_64 (its output
// sequence is fixed by the standard) plus the explicit mappings below,
// so results do not depend on the libstdc++ distribution internals.
using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent child seed from a master seed and up to three
/// stream indices. Pure function; equal inputs give equal seeds.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = master;
    splitmix64(s);
    s ^= 0xa0761d6478bd642fULL + a;
    splitmix64(s);
    s ^= 0xe7037ed1a0b428dbULL + b;
    splitmix64(s);
    s ^= 0x8ebc6af09c88c6e3ULL + c;
    return splitmix64(s);
}

inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

// Unbiased integer in [0, bound) by rejection.
inline std::uint64_t uniform_below(Engine& eng, std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform_below: bound must be positive");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do {
        x = eng();
    } while (x >= limit);
    return x % bound;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Engine& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine& eng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(eng);
}

// Standard normal via Box-Muller; consumes two engine draws per call.
inline double normal(Engine& eng) {
    const double u1 = 1.0 - uniform01(eng);  // (0, 1]
    const double u2 = uniform01(eng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <typename T>
void shuffle(std::vector<T>& v, Engine& eng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(uniform_below(eng, i));
        std::swap(v[i - 1], v[j]);
    }
}

/// k distinct indices drawn uniformly from [0, n), in draw order.
inline std::vector<int> sample_without_replacement(int n, int k, Engine& eng) {
    if (k < 0 || k > n) throw std::invalid_argument("sample_without_replacement: k out of range");
    std::vector<int> pool(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        const std::size_t j =
            static_cast<std::size_t>(i) +
            static_cast<std::size_t>(uniform_below(eng, static_cast<std::uint64_t>(n - i)));
        std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
        out.push_back(pool[static_cast<std::size_t>(i)]);
    }
    return out;
}

}  // namespace enamle::rng
