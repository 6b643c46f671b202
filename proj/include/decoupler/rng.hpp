// rng.hpp - deterministic per-trajectory random substreams

#pragma once

#include <cstdint>
#include <random>

namespace decoupler {

using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed of substream `index` under `master`. Two rounds of mixing so that
// neighbouring (master, index) pairs land far apart.
constexpr std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) noexcept
{
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline Engine make_engine(std::uint64_t master, std::uint64_t index)
{
    return Engine{substream_seed(master, index)};
}

} // namespace decoupler
