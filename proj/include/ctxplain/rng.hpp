#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace ctx {

namespace detail {

// splitmix64 finalizer, used to spread low-entropy seeds across all 64 bits.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

// Stable seed derivation: FNV-1a over the root seed bytes plus a stage name
// (or index), then avalanched. Every random stream in the pipeline hangs off
// one root seed through this function.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stage) {
    std::uint64_t h = 1469598103934665603ULL;
    for (int i = 0; i < 8; ++i) {
        h ^= (root >> (8 * i)) & 0xffULL;
        h *= 1099511628211ULL;
    }
    for (unsigned char c : stage) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return detail::mix64(h);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
    return detail::mix64(root ^ detail::mix64(index + 0x51ed2701a3c5e1bULL));
}

// mt19937_64 wrapped with hand-rolled draw functions. std::*_distribution is
// implementation-defined, so byte-reproducibility across standard libraries
// requires owning the bit-to-value mapping.
class rng64 {
public:
    explicit rng64(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t bits() { return eng_(); }

    // uniform double in [0, 1)
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

    // uniform integer in [0, n), rejection sampled
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        std::uint64_t mask = ~std::uint64_t(0) >> __builtin_clzll((n - 1) | 1);
        for (;;) {
            std::uint64_t v = eng_() & mask;
            if (v < n) return v;
        }
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller; one spare cached so draws come in a fixed order.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace ctx
