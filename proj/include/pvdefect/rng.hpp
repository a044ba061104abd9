#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pvdefect {

/// splitmix64 finaliser.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// FNV-1a over the bytes of `s`; stable across platforms, unlike std::hash.
inline constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Independent random stream keyed by (seed, key); results do not depend on evaluation order.
inline std::mt19937_64 keyed_rng(std::uint64_t seed, std::string_view key, std::uint64_t salt = 0) {
    return std::mt19937_64(mix64(seed ^ mix64(fnv1a64(key) + salt)));
}

}  // namespace pvdefect
