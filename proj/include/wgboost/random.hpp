#pragma once

#include <cstdint>
#include <random>

namespace wgboost {

using Rng = std::mt19937_64;

// Independent random streams derived from one master seed.
enum class Stream : std::uint64_t {
    Init = 1,
    Langevin = 2,
    Subsample = 3,
    ValidationSplit = 4,
    TestSplit = 5,
    Synthetic = 6,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t a = 0,
                                    std::uint64_t b = 0) noexcept {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
    h = splitmix64(h ^ a);
    return splitmix64(h ^ (b + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t master, Stream stream, std::uint64_t a = 0, std::uint64_t b = 0) {
    return Rng(derive_seed(master, stream, a, b));
}

} // namespace wgboost
