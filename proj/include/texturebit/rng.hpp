#ifndef TEXTUREBIT_RNG_HPP
#define TEXTUREBIT_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace texturebit {

/// Stream tags so independent consumers of one seed never share a sequence.
enum class Stream : std::uint32_t {
    init = 1,
    batch = 2,
    synthetic = 3,
    noise = 4,
    corpus = 5,
};

/// Seedable, splittable generator.
///
/// The engine is std::mt19937_64 keyed through std::seed_seq with the words
/// (seed low, seed high, stream, key...). Both are fully specified by the
/// standard, and the distributions below are written out here rather than
/// taken from <random> (whose distributions are implementation-defined), so
/// sequences are identical on every conforming toolchain.
class Rng {
public:
    Rng(std::uint64_t seed, Stream stream, std::initializer_list<std::uint64_t> keys = {}) {
        std::vector<std::uint32_t> words{std::uint32_t(seed), std::uint32_t(seed >> 32),
                                         std::uint32_t(stream)};
        for (auto k : keys) {
            words.push_back(std::uint32_t(k));
            words.push_back(std::uint32_t(k >> 32));
        }
        std::seed_seq seq(words.begin(), words.end());
        engine_.seed(seq);
    }

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on [lo, hi], unbiased by rejection.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = std::uint64_t(hi - lo) + 1;
        if (span == 0) return std::int64_t(next());
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % span;
        std::uint64_t v;
        do {
            v = next();
        } while (v >= limit);
        return lo + std::int64_t(v % span);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal (Box-Muller, one draw per call).
    double normal() {
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace texturebit

#endif // TEXTUREBIT_RNG_HPP
