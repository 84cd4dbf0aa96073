#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>
#include <vector>

namespace aedet {

// All randomness in the toolkit flows through this wrapper. The raw engine is
// std::mt19937_64 (bit-exact by the standard); the real-valued transforms are
// spelled out here instead of using std::*_distribution, whose output is
// implementation defined. Identical seeds therefore give identical streams on
// any conforming platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller, no cached spare so the draw count per call is fixed.
    double gaussian(double mean = 0.0, double sigma = 1.0) {
        const double u1 = 1.0 - uniform01();  // (0, 1], keeps log() finite
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + sigma * r * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Uniform integer in [0, n). Modulo bias is below 2^-52 for the sizes
    // used here.
    std::uint64_t below(std::uint64_t n) { return eng_() % n; }

    // Fisher-Yates with a pinned draw order (std::shuffle's algorithm is
    // unspecified).
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::mt19937_64 eng_;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace detail

// Derives an independent child seed from a parent seed and a tag (node id,
// stream name, epoch index, ...). FNV-1a over the tag, then a splitmix64
// finalizer.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
    std::uint64_t h = 0xCBF29CE484222325ULL ^ seed;
    for (const char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return detail::splitmix64(h);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
    return detail::splitmix64(derive_seed(seed, tag) ^ detail::splitmix64(index));
}

}  // namespace aedet
