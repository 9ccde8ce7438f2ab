#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace vbglmm {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Engine for the stream keyed by (seed, keys...). Streams with different keys
/// are independent of each other and of the order in which they are created.
inline std::mt19937_64 keyed_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = splitmix64(seed);
    for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
    return std::mt19937_64(h);
}

}  // namespace vbglmm
