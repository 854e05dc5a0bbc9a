#pragma once

#include <cstdint>
#include <string_view>

namespace nhd {

/**
 * Counter-based generator: draw k of stream `key` is a pure function of
 * (key, k), so parallel tasks reproduce regardless of scheduling.
 * The mixing function is the SplitMix64 finalizer.
 */
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t combine(std::uint64_t a, std::uint64_t b) {
        return mix(a ^ (mix(b) + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2)));
    }

    /// FNV-1a, for folding labels such as a measurement basis into a key.
    static std::uint64_t hash(std::string_view s) {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

    /// Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    [[nodiscard]] std::uint64_t counter() const { return counter_; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace nhd
