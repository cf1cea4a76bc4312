#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace ccest {

// Purpose tags for seed splitting. Values are part of the replay contract:
// changing one changes every derived stream that uses it.
enum class Stream : std::uint64_t {
    Vertex = 0x7665727465780001ULL,
    Trial = 0x747269616c000002ULL,
    KMeans = 0x6b6d65616e730003ULL,
    PcKMeansOrder = 0x70636b6d00000004ULL,
    Fft = 0x6666740000000005ULL,
    Synthetic = 0x73796e7468000006ULL,
    MeanShift = 0x6d73000000000007ULL,
};

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream tag, std::uint64_t index = 0) noexcept {
    return mix64(mix64(seed ^ static_cast<std::uint64_t>(tag)) + mix64(index + 0x632be59bd9b4e019ULL));
}

/// Deterministic random stream. Wraps mt19937_64 and does its own
/// conversions so that draws are identical across standard libraries
/// (std:: distributions are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t seed, Stream tag, std::uint64_t index = 0) : engine_(derive_seed(seed, tag, index)) {}

    std::uint64_t next_u64() { return engine_(); }

    // [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased integer in [0, n), n >= 1.
    std::size_t uniform_index(std::size_t n) {
        const std::uint64_t bound = n;
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<unsigned __int128>(next_u64()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::size_t>(m >> 64);
    }

    // Standard normal via Box-Muller, one value per call.
    double normal();

    template <typename It>
    void shuffle(It first, It last) {
        const auto count = static_cast<std::size_t>(last - first);
        for (std::size_t i = count; i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(first[i - 1], first[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace ccest
