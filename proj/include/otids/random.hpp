#pragma once
#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace otids {

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives a child seed from a master seed and a stage label (FNV-1a over the
/// label, then mixed). Every random stage in the pipeline gets its own label.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view label) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return mix64(master ^ mix64(h));
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept
{
    return mix64(master ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Portable PRNG: the std distributions are implementation-defined, so bounded
/// integers and uniforms are derived from the raw 64-bit stream here.
class Rng
{
    std::mt19937_64 engine_;

public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound)
    {
        const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % bound;
        std::uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return r % bound;
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller.
    double normal()
    {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    bool bernoulli(double p) { return uniform() < p; }

    template <class T>
    void shuffle(std::vector<T>& v)
    {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }
};

} // namespace otids
