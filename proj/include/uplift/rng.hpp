#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace uplift {

// splitmix64 generator with hand-rolled uniform/normal transforms.
// std::<random> distributions are implementation-defined, and every seeded
// result in this project must be bit-identical across hosts.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; pairs are not cached so the stream
    // consumed per call is fixed (two words).
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // Uniform integer in [0, n) by rejection, bias-free.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = n * (UINT64_MAX / n);
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

// Fans one master seed out to named per-stage streams (FNV-1a over the tag,
// mixed through one splitmix step) so stages never share a stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stage) {
    std::uint64_t h = 1469598103934665603ull;
    for (const char ch : stage) {
        h ^= static_cast<unsigned char>(ch);
        h *= 1099511628211ull;
    }
    Rng mix(master ^ h);
    return mix.next_u64();
}

// Per-item substream for counter-based generation: results do not depend on
// the order items are visited in.
inline std::uint64_t item_seed(std::uint64_t stream, std::uint64_t index) {
    Rng mix(stream ^ (0xD1B54A32D192ED03ull * (index + 1)));
    return mix.next_u64();
}

}  // namespace uplift
