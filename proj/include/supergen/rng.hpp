#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace supergen {

// splitmix64 finalizer; used for stateless per-element hashing.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_keys(std::initializer_list<std::uint64_t> keys) noexcept {
    std::uint64_t h = 0x51ed270b27d3a3c5ULL;
    for (auto k : keys) h = mix64(h ^ k);
    return h;
}

// Uniform in [0, 1) from a 64-bit hash.
inline double unit_from_hash(std::uint64_t h) noexcept {
    return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
}

// Independent deterministic stream keyed by (seed, purpose, index).
enum class StreamKind : std::uint64_t {
    Stage1Init = 1,
    Stage2Renoise = 2,
    SamplerNoise = 3,
    Scene = 4,
    Drift = 5,
};

inline std::mt19937_64 make_stream(std::uint64_t seed, StreamKind kind, std::uint64_t index = 0) {
    return std::mt19937_64(hash_keys({seed, static_cast<std::uint64_t>(kind), index}));
}

}  // namespace supergen
