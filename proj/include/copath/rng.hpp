#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace copath {

// splitmix64 finalizer; used to derive independent sub-seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) noexcept {
    return mix64(mix64(seed) ^ (salt * 0xd1b54a32d192ed03ULL));
}

// FNV-1a
constexpr std::uint64_t hash_string(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

using Engine = std::mt19937_64;

// Bit-reproducible across standard libraries, unlike std::uniform_real_distribution.
inline double uniform01(Engine& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Engine& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline std::size_t uniform_index(Engine& rng, std::size_t n) {
    // Rejection sampling keeps the draw unbiased and library independent.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r;
    do {
        r = rng();
    } while (r >= limit);
    return static_cast<std::size_t>(r % n);
}

inline double standard_normal(Engine& rng) {
    // Box-Muller on the portable uniform.
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

template <class T>
void shuffle(std::vector<T>& v, Engine& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

}  // namespace copath
