#pragma once

#include <array>
#include <cstdint>
#include <cmath>
#include <vector>

namespace mtg {

/**
 * Deterministic seedable generator (xoshiro256** seeded via splitmix64).
 *
 * Shuffling and bounded-int draws are implemented here by hand because the
 * std:: distributions are implementation-defined and would break replay
 * across standard libraries. Same seed, same platform-independent stream.
 */
struct Rng {
    std::array<std::uint64_t, 4> s{};

    Rng() : Rng(0) {}
    explicit Rng(std::uint64_t seed) { reseed(seed); }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Derive an independent stream from (seed, index), e.g. per-episode seeds.
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t index) {
        std::uint64_t x = seed ^ (0x100000001b3ULL * (index + 1));
        return splitmix64(x);
    }

    void reseed(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : s) word = splitmix64(x);
    }

    static std::uint64_t rotl(std::uint64_t v, int k) {
        return (v << k) | (v >> (64 - k));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s[1] * 5, 7) * 9;
        const std::uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }

    /// Unbiased integer in [0, n). Lemire rejection; deterministic given the stream.
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    /// Uniform double in [0, 1) with 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (consumes two uniforms per pair).
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 1e-300) u1 = next_double();
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    /// Fisher-Yates: for i = n-1 down to 1, swap(v[i], v[j]) with j in [0, i].
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Hash of the next four outputs of a throwaway copy; used as a seed fingerprint.
    std::uint64_t fingerprint() const {
        Rng probe = *this;
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (int i = 0; i < 4; ++i) {
            std::uint64_t w = probe.next_u64();
            for (int b = 0; b < 8; ++b) {
                h ^= (w >> (8 * b)) & 0xff;
                h *= 0x100000001b3ULL;
            }
        }
        return h;
    }

  private:
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// FNV-1a 64-bit, the project-wide hash for states and traces.
struct Fnv1a {
    std::uint64_t h = 0xcbf29ce484222325ULL;

    void add_byte(std::uint8_t b) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    void add_u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) add_byte(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void add_i64(std::int64_t v) { add_u64(static_cast<std::uint64_t>(v)); }
    void add_double(double d) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(d));
        __builtin_memcpy(&bits, &d, sizeof(bits));
        add_u64(bits);
    }
    void add_bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        for (std::size_t i = 0; i < n; ++i) add_byte(p[i]);
    }
};

}  // namespace mtg
