#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace quanteval {

inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

inline std::string context_hash(std::string_view context) { return hex64(fnv1a64(context)); }

// std::mt19937_64 output is fixed by the standard; the distributions are not, so draws are
// mapped by hand to stay identical across standard libraries.
inline std::size_t draw_index(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

inline double draw_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double draw_range(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * draw_unit(rng);
}

}  // namespace quanteval
