#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace umr::util {

// Deterministic 64-bit generator. std:: engines are portable but the
// distributions on top of them are not, so all randomness in this project
// goes through this struct and the helpers below.
struct SplitMix64 {
    uint64_t state;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 bits of mantissa.
    double uniform() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). n must be > 0. Uses rejection sampling so
    // the result is unbiased and identical on every platform.
    uint64_t below(uint64_t n) {
        uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

    // Standard normal via Box-Muller on two uniform draws.
    double gaussian() {
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }
};

template <typename T>
void shuffle(std::vector<T>& v, SplitMix64& rng) {
    if (v.size() < 2) return;
    for (size_t i = v.size() - 1; i > 0; --i) {
        size_t j = static_cast<size_t>(rng.below(i + 1));
        std::swap(v[i], v[j]);
    }
}

// FNV-1a over 8 little-endian seed bytes followed by the string bytes.
uint64_t fnv1a64(std::string_view s, uint64_t seed);

// 32 hex chars from two independently seeded fnv1a64 passes.
std::string digest_hex(std::string_view s);

std::string to_hex(uint64_t v);

// ASCII lowercase, split on any non-alphanumeric byte, drop empties.
std::vector<std::string> tokenize(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Shortest round-trip decimal rendering of a double (std::to_chars).
std::string format_double(double v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace umr::util
