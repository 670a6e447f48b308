#pragma once

#include <cstdint>
#include <limits>

namespace attrecon {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Counter-based generator: the n-th draw is a pure function of (key, n), so
// streams keyed by (seed, epoch, purpose) are reproducible independently of
// how many values other streams consumed. Satisfies UniformRandomBitGenerator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t substream = 0)
        : key_(splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ (substream * 0xD1B54A32D192ED03ULL))) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return splitmix64(key_ ^ splitmix64(counter_++)); }

    // Uniform in [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Lemire's multiply-shift with rejection.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = (*this)();
            const unsigned __int128 m = static_cast<unsigned __int128>(r) * n;
            if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::uint64_t>(m >> 64);
        }
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Fisher-Yates with the generator above; std::shuffle's exact draw sequence
// is implementation-defined and would break cross-toolchain reproducibility.
template <class It>
void shuffle(It first, It last, CounterRng& rng) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
        const auto j = rng.below(i);
        std::swap(first[i - 1], first[j]);
    }
}

// Stream identifiers for the places that draw randomness.
enum class RngStream : std::uint64_t {
    Split = 1,
    Init = 2,
    Dropout = 3,
    NlscSample = 4,
    Synthetic = 5,
    KMeans = 6,
    Folds = 7,
    Classifier = 8,
    ClassifierDropout = 9,
    Shuffle = 10,
};

inline CounterRng make_rng(std::uint64_t seed, RngStream stream, std::uint64_t substream = 0) {
    return CounterRng(seed, static_cast<std::uint64_t>(stream), substream);
}

} // namespace attrecon
