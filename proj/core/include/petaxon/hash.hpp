#pragma once

#include <cstdint>
#include <string_view>

namespace petaxon {

// FNV-1a 64-bit. Bucket assignments derived from it are part of the model
// file contract, so the constants here must never change.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::uint64_t h, std::string_view s) {
    for (unsigned char c : s) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace petaxon
